//! Closed-form coupling thresholds for homogeneous all-to-all networks.
//!
//! `λ*` is the algebraic connectivity above which every equilibrium is
//! synchronized (`V₁ℓ₁V₂ℓ₂ < (γ₁ + λ₂)γ₂`), and `k^λ = λ*/N` its gain under
//! all-to-all coupling (`λ₂ = Nk`). For the piecewise-affine subclass, `k_q`
//! is the gain above which no saturated domain with `m` ON compartments holds
//! an equilibrium, and `k_s` the largest of those.
//!
//! With `V = V₁V₂/(γ₁γ₂)` and `q̄ = m/N`,
//!
//! ```text
//! k₁ = γ₁((θ+δ) - V) / (N(Vq̄ - (θ+δ)))
//! k₂ = θγ₁ / (N(Vq̄ - θ))
//! k_q = min(k₁, k₂)   if θ < Vq̄ < θ+δ
//!     = k₂            if Vq̄ ≥ θ+δ
//!     = k₁            if Vq̄ ≤ θ
//! ```
//!
//! Each case picks the branches with finite positive values, so the band
//! edges `Vq̄ = θ` and `Vq̄ = θ+δ` never divide by zero.
//!
//! Parameters are converted to exact rationals through their shortest decimal
//! form, so thresholds such as `9/35` are reported exactly.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::model::{check_assumptions, ModelParams};
use crate::regulatory::RegulatoryFunction;

/// A threshold value, with its exact rational form when one is available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: f64,
    pub exact: Option<String>,
}

impl Threshold {
    fn from_rational(r: &Rational) -> Self {
        Self {
            value: exact::to_f64(r),
            exact: Some(exact::display(r)),
        }
    }

    fn from_f64(value: f64) -> Self {
        Self { value, exact: None }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(e) if e.contains('/') => write!(f, "{} ({e})", self.value),
            _ => write!(f, "{}", self.value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KqCase {
    /// `θ < Vq̄ < θ+δ`
    Band,
    /// `Vq̄ ≥ θ+δ`
    Above,
    /// `Vq̄ ≤ θ`
    Below,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KqEntry {
    pub m: usize,
    pub q_bar: String,
    pub case: KqCase,
    pub k1: Option<Threshold>,
    pub k2: Option<Threshold>,
    pub k_q: Threshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub n: usize,
    pub lambda_star: Threshold,
    pub k_lambda: Threshold,
    pub k_q: Vec<KqEntry>,
    pub k_s: Threshold,
    /// `k^λ - k_s`.
    pub gap: Threshold,
}

impl fmt::Display for ThresholdReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "N = {}", self.n)?;
        writeln!(f, "lambda*  = {}", self.lambda_star)?;
        writeln!(f, "k_lambda = {}", self.k_lambda)?;
        writeln!(f, "{:>6}  {:>6}  {:>24}", "q_bar", "case", "k_q")?;
        for e in &self.k_q {
            let case = match e.case {
                KqCase::Band => "band",
                KqCase::Above => "above",
                KqCase::Below => "below",
            };
            writeln!(f, "{:>6}  {:>6}  {:>24}", e.q_bar, case, e.k_q.to_string())?;
        }
        writeln!(f, "k_s      = {}", self.k_s)?;
        write!(f, "gap      = {}", self.gap)
    }
}

fn exact_lipschitz(g: &RegulatoryFunction) -> Option<Rational> {
    match g {
        RegulatoryFunction::PwaActivator { delta, .. } => Some(exact::one() / exact::from_decimal(*delta)?),
        RegulatoryFunction::Identity => Some(exact::one()),
        RegulatoryFunction::Repressor { inner } => exact_lipschitz(inner),
        RegulatoryFunction::Hill { theta, n } if *n == 1.0 => Some(exact::one() / exact::from_decimal(*theta)?),
        RegulatoryFunction::Hill { .. } => None,
    }
}

fn exact_lambda_star(p: &ModelParams) -> Option<Rational> {
    let raw =
        exact::from_decimal(p.v1)? * exact_lipschitz(&p.g1)? * exact::from_decimal(p.v2)? * exact_lipschitz(&p.g2)?
            / exact::from_decimal(p.gamma2)?
            - exact::from_decimal(p.gamma1)?;
    Some(if exact::is_positive(&raw) { raw } else { exact::zero() })
}

/// `λ* = max(0, V₁ℓ₁V₂ℓ₂/γ₂ - γ₁)`, the algebraic connectivity at which the
/// synchronization condition becomes an equality.
pub fn sync_connectivity_bound(p: &ModelParams) -> Threshold {
    match exact_lambda_star(p) {
        Some(r) => Threshold::from_rational(&r),
        None => {
            let l1 = p.g1.lipschitz_constant();
            let l2 = p.g2.lipschitz_constant();
            Threshold::from_f64((p.v1 * l1 * p.v2 * l2 / p.gamma2 - p.gamma1).max(0.0))
        }
    }
}

/// `λ*/N`: all-to-all gain above which every equilibrium is synchronized.
pub fn k_lambda(p: &ModelParams, n: usize) -> Threshold {
    match exact_lambda_star(p) {
        Some(r) => Threshold::from_rational(&(r / exact::int(n as i64))),
        None => Threshold::from_f64(sync_connectivity_bound(p).value / n as f64),
    }
}

struct ExactParams {
    gamma1: Rational,
    v: Rational,
    theta: Rational,
    delta: Rational,
}

fn exact_params(p: &ModelParams) -> Result<ExactParams> {
    let (theta, delta) = p.require_pwa()?;
    let report = check_assumptions(p, 1);
    if !report.assumption2.holds() {
        return Err(Error::AssumptionViolated(
            "V₁V₂/(δγ₁γ₂) must exceed 1 + θ/δ for bistable compartments".into(),
        ));
    }
    let conv = |x: f64, name: &'static str| {
        exact::from_decimal(x).ok_or(Error::InvalidParameter {
            name,
            value: x,
            reason: "must be finite",
        })
    };
    let gamma1 = conv(p.gamma1, "gamma1")?;
    let v = conv(p.v1, "v1")? * conv(p.v2, "v2")? / (gamma1.clone() * conv(p.gamma2, "gamma2")?);
    Ok(ExactParams {
        gamma1,
        v,
        theta: conv(theta, "theta")?,
        delta: conv(delta, "delta")?,
    })
}

fn k_q_exact(e: &ExactParams, n: usize, m: usize) -> Result<(KqCase, Option<Rational>, Option<Rational>, Rational)> {
    if m == 0 || m >= n {
        return Err(Error::InvalidActivation {
            m,
            max: n.saturating_sub(1),
        });
    }
    let nn = exact::int(n as i64);
    let q = exact::int(m as i64) / &nn;
    let vq = &e.v * &q;
    let upper = &e.theta + &e.delta;
    let k1 = || &e.gamma1 * (&upper - &e.v) / (&nn * (&vq - &upper));
    let k2 = || &e.theta * &e.gamma1 / (&nn * (&vq - &e.theta));
    Ok(if vq >= upper {
        let v2 = k2();
        (KqCase::Above, None, Some(v2.clone()), v2)
    } else if vq <= e.theta {
        let v1 = k1();
        (KqCase::Below, Some(v1.clone()), None, v1)
    } else {
        let (v1, v2) = (k1(), k2());
        let min = if v1 <= v2 { v1.clone() } else { v2.clone() };
        (KqCase::Band, Some(v1), Some(v2), min)
    })
}

/// Gain above which no saturated domain with `m` of `n` compartments ON
/// holds an equilibrium.
pub fn k_q(p: &ModelParams, n: usize, m: usize) -> Result<KqEntry> {
    let e = exact_params(p)?;
    let (case, k1, k2, k) = k_q_exact(&e, n, m)?;
    Ok(KqEntry {
        m,
        q_bar: exact::display(&(exact::int(m as i64) / exact::int(n as i64))),
        case,
        k1: k1.as_ref().map(Threshold::from_rational),
        k2: k2.as_ref().map(Threshold::from_rational),
        k_q: Threshold::from_rational(&k),
    })
}

/// `max_{m=1..N-1} k_q`.
pub fn k_s(p: &ModelParams, n: usize) -> Result<Threshold> {
    Ok(Threshold::from_rational(&k_s_exact(p, n)?))
}

fn k_s_exact(p: &ModelParams, n: usize) -> Result<Rational> {
    if n < 2 {
        return Err(Error::InvalidActivation { m: 1, max: 0 });
    }
    let e = exact_params(p)?;
    let mut best: Option<Rational> = None;
    for m in 1..n {
        let (_, _, _, k) = k_q_exact(&e, n, m)?;
        if best.as_ref().is_none_or(|b| k > *b) {
            best = Some(k);
        }
    }
    Ok(best.expect("n >= 2"))
}

pub fn threshold_report(p: &ModelParams, n: usize) -> Result<ThresholdReport> {
    let k_q = (1..n).map(|m| k_q(p, n, m)).collect::<Result<Vec<_>>>()?;
    let k_s = k_s_exact(p, n)?;
    let k_lambda = k_lambda(p, n);
    let gap = match exact_lambda_star(p) {
        Some(l) => Threshold::from_rational(&(l / exact::int(n as i64) - &k_s)),
        None => Threshold::from_f64(k_lambda.value - exact::to_f64(&k_s)),
    };
    Ok(ThresholdReport {
        n,
        lambda_star: sync_connectivity_bound(p),
        gap,
        k_lambda,
        k_q,
        k_s: Threshold::from_rational(&k_s),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub delta: f64,
    pub inv_delta: f64,
    pub k_lambda: f64,
    pub k_s: f64,
}

/// `k^λ` and `k_s` as the linear band width `δ` of `g₁` varies, `θ` fixed.
pub fn delta_sweep(p: &ModelParams, n: usize, deltas: &[f64]) -> Result<Vec<DeltaRow>> {
    let (theta, _) = p.require_pwa()?;
    deltas
        .iter()
        .map(|&delta| {
            let mut q = p.clone();
            q.g1 = RegulatoryFunction::pwa(theta, delta)?;
            Ok(DeltaRow {
                delta,
                inv_delta: 1.0 / delta,
                k_lambda: k_lambda(&q, n).value,
                k_s: k_s(&q, n)?.value,
            })
        })
        .collect()
}

/// CSV with header `delta,inv_delta,k_lambda,k_s`.
pub fn write_delta_csv<W: std::io::Write>(rows: &[DeltaRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["delta", "inv_delta", "k_lambda", "k_s"])?;
    for r in rows {
        w.write_record([r.delta, r.inv_delta, r.k_lambda, r.k_s].map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
