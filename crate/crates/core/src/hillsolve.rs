//! Equilibria of networks with a smooth first regulation and `g₂` identity.
//!
//! At an equilibrium `X̄₂ = (V₂/γ₂)G₁(X̄₁)`, so the first block alone solves
//!
//! ```text
//! F(X₁) = (Γ₁+L)X₁ - (V₁V₂/γ₂)G₁(X₁) = 0
//! ```
//!
//! Roots are found by damped Newton iteration from two seed families: the
//! equilibria of the matched piecewise-affine surrogate, and a lattice of five
//! points per axis over `[0, V₁V₂/(γ₁γ₂)]^N`. The search is a multistart
//! heuristic; it does not certify that every root was found.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CoupledNetwork, ModelParams};
use crate::network::sync_error;
use crate::pwa::{classify_stability, enumerate_equilibria_with, EnumerateOptions, Stability, DEFAULT_MARGIN};
use crate::regulatory::RegulatoryFunction;

pub const DEFAULT_SMOOTH_TOL: f64 = 1e-10;
pub const DEFAULT_SMOOTH_CAP: usize = 6;
const MAX_NEWTON_ITERS: usize = 100;
const LATTICE_POINTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothEquilibrium {
    pub state: Vec<f64>,
    /// `‖F(X₁)‖∞` at the root.
    pub residual: f64,
    pub spectrum: Vec<[f64; 2]>,
    pub stability: Stability,
    pub synchronized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothOptions {
    pub tol: f64,
    /// Seed from the matched piecewise-affine surrogate's equilibria.
    pub surrogate_seeds: bool,
    /// Seed from the coarse lattice.
    pub lattice_seeds: bool,
    /// Largest `N` accepted.
    pub cap: usize,
}

impl Default for SmoothOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_SMOOTH_TOL,
            surrogate_seeds: true,
            lattice_seeds: true,
            cap: DEFAULT_SMOOTH_CAP,
        }
    }
}

fn require_reduction(net: &CoupledNetwork) -> Result<()> {
    if net.params().g2 == RegulatoryFunction::Identity {
        Ok(())
    } else {
        Err(Error::ReductionUnavailable)
    }
}

fn check_len(net: &CoupledNetwork, x1: &[f64]) -> Result<()> {
    if x1.len() != net.n() {
        return Err(Error::DimensionMismatch {
            expected: net.n(),
            got: x1.len(),
        });
    }
    Ok(())
}

/// `F(X₁) = (Γ₁+L)X₁ - (V₁V₂/γ₂)G₁(X₁)`.
pub fn reduced_residual(x1: &[f64], net: &CoupledNetwork) -> Result<Vec<f64>> {
    require_reduction(net)?;
    check_len(net, x1)?;
    Ok(residual_unchecked(x1, net))
}

fn residual_unchecked(x1: &[f64], net: &CoupledNetwork) -> Vec<f64> {
    let p = net.params();
    let gain = p.v1 * p.v2 / p.gamma2;
    let a = net.shifted_laplacian();
    let x = DVector::from_column_slice(x1);
    let ax = a * x;
    (0..x1.len())
        .map(|i| ax[i] - gain * p.g1.eval_unchecked(x1[i]))
        .collect()
}

/// `(Γ₁+L) - (V₁V₂/γ₂)diag(g₁'(X₁))`.
pub fn reduced_jacobian(x1: &[f64], net: &CoupledNetwork) -> Result<DMatrix<f64>> {
    require_reduction(net)?;
    check_len(net, x1)?;
    Ok(jacobian_unchecked(x1, net))
}

fn jacobian_unchecked(x1: &[f64], net: &CoupledNetwork) -> DMatrix<f64> {
    let p = net.params();
    let gain = p.v1 * p.v2 / p.gamma2;
    let mut j = net.shifted_laplacian();
    for (i, &x) in x1.iter().enumerate() {
        j[(i, i)] -= gain * p.g1.derivative(x.max(0.0));
    }
    j
}

/// `X₂ = (V₂/γ₂)G₁(X₁)` appended to `X₁`.
pub fn lift(x1: &[f64], p: &ModelParams) -> Vec<f64> {
    let mut x = x1.to_vec();
    x.extend(x1.iter().map(|&v| p.v2 / p.gamma2 * p.g1.eval_unchecked(v)));
    x
}

/// Piecewise-affine activator with the same value and slope as the Hill
/// function at its threshold: `δ = 4θ_H/n`, `θ = θ_H - δ/2`.
pub fn matched_pwa(g: &RegulatoryFunction) -> Result<RegulatoryFunction> {
    match g {
        RegulatoryFunction::Hill { theta, n } => {
            let delta = 4.0 * theta / n;
            RegulatoryFunction::pwa(theta - delta / 2.0, delta)
        }
        RegulatoryFunction::PwaActivator { .. } => Ok(g.clone()),
        _ => Err(Error::config("g1", "matched surrogate requires a Hill activator")),
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton iteration on `F`, kept in the nonnegative orthant.
fn newton(net: &CoupledNetwork, seed: &[f64], tol: f64) -> Option<Vec<f64>> {
    let mut x = seed.to_vec();
    let mut f = residual_unchecked(&x, net);
    let mut norm = inf_norm(&f);
    for _ in 0..MAX_NEWTON_ITERS {
        if norm < tol {
            return Some(x);
        }
        let j = jacobian_unchecked(&x, net);
        let rhs = -DVector::from_column_slice(&f);
        let step = j.lu().solve(&rhs)?;
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-6 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| (a + t * d).max(0.0)).collect();
            let ft = residual_unchecked(&trial, net);
            let nt = inf_norm(&ft);
            if nt.is_finite() && nt < norm {
                x = trial;
                f = ft;
                norm = nt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (norm < tol).then_some(x)
}

fn surrogate_seeds(net: &CoupledNetwork) -> Result<Vec<Vec<f64>>> {
    let mut p = net.params().clone();
    p.g1 = matched_pwa(&p.g1)?;
    let surrogate = CoupledNetwork::new(p, net.graph().clone());
    let e = enumerate_equilibria_with(
        &surrogate,
        &EnumerateOptions {
            cap: DEFAULT_SMOOTH_CAP.max(net.n()),
            ..EnumerateOptions::default()
        },
    )?;
    Ok(e.equilibria.into_iter().map(|r| r.state[..net.n()].to_vec()).collect())
}

fn lattice_seeds(net: &CoupledNetwork) -> Vec<Vec<f64>> {
    let p = net.params();
    let top = p.v1 * p.v2 / (p.gamma1 * p.gamma2);
    let n = net.n();
    let axis: Vec<f64> = (0..LATTICE_POINTS)
        .map(|i| top * i as f64 / (LATTICE_POINTS - 1) as f64)
        .collect();
    let total = LATTICE_POINTS.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            (0..n)
                .map(|_| {
                    let v = axis[idx % LATTICE_POINTS];
                    idx /= LATTICE_POINTS;
                    v
                })
                .collect()
        })
        .collect()
}

pub fn find_equilibria_smooth(net: &CoupledNetwork, tol: f64) -> Result<Vec<SmoothEquilibrium>> {
    find_equilibria_smooth_with(
        net,
        &SmoothOptions {
            tol,
            ..SmoothOptions::default()
        },
    )
}

/// Multistart Newton search. Roots within `10³·tol` of each other are merged;
/// results are sorted lexicographically by `X₁`.
pub fn find_equilibria_smooth_with(net: &CoupledNetwork, opts: &SmoothOptions) -> Result<Vec<SmoothEquilibrium>> {
    require_reduction(net)?;
    let n = net.n();
    if n > opts.cap {
        return Err(Error::TooManyDomains { n, cap: opts.cap });
    }
    let mut seeds = Vec::new();
    if opts.surrogate_seeds {
        seeds.extend(surrogate_seeds(net)?);
    }
    if opts.lattice_seeds {
        seeds.extend(lattice_seeds(net));
    }
    let roots: Vec<Vec<f64>> = seeds.par_iter().filter_map(|s| newton(net, s, opts.tol)).collect();

    let radius = 1e3 * opts.tol;
    let mut unique: Vec<Vec<f64>> = Vec::new();
    for r in roots {
        if !unique
            .iter()
            .any(|u| u.iter().zip(&r).all(|(a, b)| (a - b).abs() <= radius))
        {
            unique.push(r);
        }
    }
    if unique.is_empty() {
        log::warn!("Newton search converged from none of {} seeds", seeds.len());
    }
    unique.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let p = net.params();
    Ok(unique
        .into_iter()
        .map(|x1| {
            let residual = inf_norm(&residual_unchecked(&x1, net));
            let state = lift(&x1, p);
            let (stability, spectrum) = classify_stability(&net.jacobian(&state), DEFAULT_MARGIN);
            let synchronized = sync_error(&state[..n]) < radius && sync_error(&state[n..]) < radius;
            SmoothEquilibrium {
                state,
                residual,
                spectrum,
                stability,
                synchronized,
            }
        })
        .collect())
}
