#![allow(dead_code)]

use bistable_net::model::{CoupledNetwork, ModelParams};
use bistable_net::network::{build_topology, TopologyKind};
use bistable_net::regulatory::RegulatoryFunction;
use nalgebra::DMatrix;

/// Unit rates, `g₁` PWA with `θ = 0.45` and the given `δ`, `g₂` identity.
pub fn unit_pwa(delta: f64) -> ModelParams {
    ModelParams::new(
        1.0,
        1.0,
        1.0,
        1.0,
        RegulatoryFunction::pwa(0.45, delta).unwrap(),
        RegulatoryFunction::Identity,
    )
    .unwrap()
}

/// `V₁ = V₂ = 3`, unit decay, Hill `θ_H = 1.5`, `n = 3`.
pub fn hill3() -> ModelParams {
    ModelParams::new(
        1.0,
        1.0,
        3.0,
        3.0,
        RegulatoryFunction::hill(1.5, 3.0).unwrap(),
        RegulatoryFunction::Identity,
    )
    .unwrap()
}

pub fn network(p: ModelParams, kind: TopologyKind, n: usize, k: f64) -> CoupledNetwork {
    CoupledNetwork::new(p, build_topology(kind, n, k, None).unwrap())
}

/// `inf { x : f(x) > y }` read off a uniform grid over `[a, b]`.
///
/// For a non-decreasing `f` the true value lies within one grid step below
/// the returned point.
pub struct GridInverse {
    a: f64,
    step: f64,
    values: Vec<f64>,
}

impl GridInverse {
    pub fn new(f: &RegulatoryFunction, a: f64, b: f64, step: f64) -> Self {
        let count = ((b - a) / step).round() as usize;
        let values = (0..=count).map(|i| f.eval(a + i as f64 * step).unwrap()).collect();
        Self { a, step, values }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn inverse(&self, y: f64) -> f64 {
        let i = self.values.partition_point(|&v| v <= y);
        self.a + i.min(self.values.len() - 1) as f64 * self.step
    }
}

/// Central-difference Jacobian of `f` at `x`.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> DMatrix<f64> {
    let n = x.len();
    let m = f(x).len();
    let mut j = DMatrix::zeros(m, n);
    for c in 0..n {
        let mut up = x.to_vec();
        let mut dn = x.to_vec();
        up[c] += h;
        dn[c] -= h;
        let (fu, fd) = (f(&up), f(&dn));
        for r in 0..m {
            j[(r, c)] = (fu[r] - fd[r]) / (2.0 * h);
        }
    }
    j
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
