//! Compartment and network parameterization.
//!
//! State vectors use the stacked block layout `[X₁; X₂]`: entries `0..N` hold
//! the first species of every compartment and `N..2N` the second.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::network::{DiffusionGraph, LaplacianMatrix};
use crate::regulatory::{Bound, Orientation, RegulatoryFunction};

/// Rates and regulation of one compartment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ModelParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub v1: f64,
    pub v2: f64,
    pub g1: RegulatoryFunction,
    pub g2: RegulatoryFunction,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    gamma1: f64,
    gamma2: f64,
    v1: f64,
    v2: f64,
    g1: RegulatoryFunction,
    g2: RegulatoryFunction,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.gamma1, r.gamma2, r.v1, r.v2, r.g1, r.g2)
    }
}

impl ModelParams {
    pub fn new(
        gamma1: f64,
        gamma2: f64,
        v1: f64,
        v2: f64,
        g1: RegulatoryFunction,
        g2: RegulatoryFunction,
    ) -> Result<Self> {
        for (name, value) in [("gamma1", gamma1), ("gamma2", gamma2), ("v1", v1), ("v2", v2)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "rates must be finite and > 0",
                });
            }
        }
        Ok(Self {
            gamma1,
            gamma2,
            v1,
            v2,
            g1,
            g2,
        })
    }

    /// The piecewise-affine subclass: `g₁` a PWA activator, `g₂` the identity.
    /// Returns `(θ, δ)` when it applies.
    pub fn pwa_subclass(&self) -> Option<(f64, f64)> {
        match (&self.g1, &self.g2) {
            (RegulatoryFunction::PwaActivator { theta, delta }, RegulatoryFunction::Identity) => Some((*theta, *delta)),
            _ => None,
        }
    }

    pub fn require_pwa(&self) -> Result<(f64, f64)> {
        self.pwa_subclass().ok_or(Error::NotPwaSubclass)
    }

    /// `V₁V₂/(γ₁γ₂)`, the ON level of the first species.
    pub fn on_level(&self) -> f64 {
        self.v1 * self.v2 / (self.gamma1 * self.gamma2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Holds,
    Fails,
    NotApplicable,
}

impl Check {
    fn from_bool(b: bool) -> Self {
        if b {
            Check::Holds
        } else {
            Check::Fails
        }
    }

    pub fn holds(self) -> bool {
        self == Check::Holds
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// Same monotone orientation for both functions, at least one bounded.
    pub assumption1: bool,
    /// Bistability of the uncoupled PWA compartment.
    pub assumption2: Check,
    /// `V₁V₂/(γ₁γ₂δ) > N`: interior equilibria of non-saturated domains are unstable.
    pub instability_cond: Check,
}

struct ExactPwa {
    gamma1: Rational,
    gamma2: Rational,
    v1: Rational,
    v2: Rational,
    theta: Rational,
    delta: Rational,
}

impl ExactPwa {
    fn new(p: &ModelParams) -> Option<Self> {
        let (theta, delta) = p.pwa_subclass()?;
        Some(Self {
            gamma1: exact::from_decimal(p.gamma1)?,
            gamma2: exact::from_decimal(p.gamma2)?,
            v1: exact::from_decimal(p.v1)?,
            v2: exact::from_decimal(p.v2)?,
            theta: exact::from_decimal(theta)?,
            delta: exact::from_decimal(delta)?,
        })
    }

    /// `V₁V₂/(δγ₁γ₂)`
    fn gain_ratio(&self) -> Rational {
        &self.v1 * &self.v2 / (&self.delta * &self.gamma1 * &self.gamma2)
    }
}

pub fn check_assumptions(p: &ModelParams, n: usize) -> AssumptionReport {
    let same_orientation = p.g1.orientation() == p.g2.orientation();
    let one_bounded = p.g1.upper_bound() != Bound::Unbounded || p.g2.upper_bound() != Bound::Unbounded;
    let (assumption2, instability_cond) = match ExactPwa::new(p) {
        Some(e) => {
            let ratio = e.gain_ratio();
            let a2 = ratio > exact::one() + &e.theta / &e.delta;
            let inst = ratio > exact::int(n as i64);
            (Check::from_bool(a2), Check::from_bool(inst))
        }
        None => (Check::NotApplicable, Check::NotApplicable),
    };
    AssumptionReport {
        assumption1: same_orientation && one_bounded,
        assumption2,
        instability_cond,
    }
}

/// `N` identical compartments coupled through the first species.
#[derive(Debug, Clone)]
pub struct CoupledNetwork {
    params: ModelParams,
    graph: DiffusionGraph,
    laplacian: LaplacianMatrix,
}

impl CoupledNetwork {
    pub fn new(params: ModelParams, graph: DiffusionGraph) -> Self {
        let laplacian = graph.laplacian();
        Self {
            params,
            graph,
            laplacian,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn graph(&self) -> &DiffusionGraph {
        &self.graph
    }

    pub fn laplacian(&self) -> &LaplacianMatrix {
        &self.laplacian
    }

    /// Number of compartments.
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn state_dim(&self) -> usize {
        2 * self.n()
    }

    pub fn with_gain(&self, k: f64) -> Result<Self> {
        Ok(Self::new(self.params.clone(), self.graph.with_gain(k)?))
    }

    /// `γ₁I + L`
    pub fn shifted_laplacian(&self) -> DMatrix<f64> {
        crate::network::shifted_laplacian(&self.laplacian, self.params.gamma1)
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.state_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.state_dim(),
                got: len,
            });
        }
        Ok(())
    }

    /// `Ẋ₁ = -(Γ₁+L)X₁ + V₁G₂(X₂)`, `Ẋ₂ = -Γ₂X₂ + V₂G₁(X₁)`.
    pub fn vector_field(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| v.is_nan() || **v < 0.0) {
            return Err(Error::NegativeState { index, value });
        }
        let mut out = vec![0.0; x.len()];
        self.vector_field_into(x, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation into `out`. Negative entries are passed to the
    /// regulatory functions as 0 (continuous extension outside the orthant).
    pub fn vector_field_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n();
        let p = &self.params;
        let l = self.laplacian.matrix();
        let (x1, x2) = x.split_at(n);
        for i in 0..n {
            let mut coupling = 0.0;
            for j in 0..n {
                coupling += l[(i, j)] * x1[j];
            }
            out[i] = -p.gamma1 * x1[i] - coupling + p.v1 * p.g2.eval_unchecked(x2[i]);
            out[n + i] = -p.gamma2 * x2[i] + p.v2 * p.g1.eval_unchecked(x1[i]);
        }
    }

    /// Jacobian of the vector field at `x` (right derivatives on PWA breakpoints).
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        let p = &self.params;
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        j.view_mut((0, 0), (n, n)).copy_from(&(-self.shifted_laplacian()));
        for i in 0..n {
            j[(i, n + i)] = p.v1 * p.g2.derivative(x[n + i]);
            j[(n + i, i)] = p.v2 * p.g1.derivative(x[i]);
            j[(n + i, n + i)] = -p.gamma2;
        }
        j
    }

    /// Replicate a single-compartment state `(x₁, x₂)` into every compartment.
    pub fn embed_synchronized(&self, point: [f64; 2]) -> Vec<f64> {
        let n = self.n();
        let mut x = vec![point[0]; n];
        x.extend(std::iter::repeat_n(point[1], n));
        x
    }
}

/// Per-compartment forward-invariant box `[0, x̄₁] × [0, x̄₂]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantBox {
    pub x1_max: f64,
    pub x2_max: f64,
}

impl InvariantBox {
    /// Upper bound for state index `idx` of a `2n`-dimensional state.
    pub fn upper(&self, idx: usize, n: usize) -> f64 {
        if idx < n {
            self.x1_max
        } else {
            self.x2_max
        }
    }

    /// Largest distance outside `B^N` over all components of `x`.
    pub fn excursion(&self, x: &[f64]) -> f64 {
        let n = x.len() / 2;
        x.iter()
            .enumerate()
            .map(|(i, &v)| (-v).max(v - self.upper(i, n)).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.excursion(x) == 0.0
    }
}

fn sup_on(g: &RegulatoryFunction, upper: f64) -> f64 {
    match g.orientation() {
        Orientation::Increasing => g.eval_unchecked(upper),
        Orientation::Decreasing => g.eval_unchecked(0.0),
    }
}

/// Smallest box certified by the boundary sign conditions.
///
/// With `g₁` bounded by `M`: `x̄₂ = M V₂/γ₂` and `x̄₁ = V₁/γ₁ · sup g₂` over
/// `[0, x̄₂]`, which is `g₂(M V₂/γ₂)` for increasing `g₂`. The roles swap when
/// only `g₂` is bounded.
pub fn invariant_box(p: &ModelParams) -> Result<InvariantBox> {
    if let Some(m) = p.g1.upper_bound().value() {
        let x2_max = m * p.v2 / p.gamma2;
        let x1_max = sup_on(&p.g2, x2_max) * p.v1 / p.gamma1;
        return Ok(InvariantBox { x1_max, x2_max });
    }
    if let Some(m) = p.g2.upper_bound().value() {
        let x1_max = m * p.v1 / p.gamma1;
        let x2_max = sup_on(&p.g1, x1_max) * p.v2 / p.gamma2;
        return Ok(InvariantBox { x1_max, x2_max });
    }
    Err(Error::BothUnbounded)
}

/// Equilibria of the isolated PWA compartment, as exact rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactUncoupled {
    pub off: [Rational; 2],
    pub saddle: [Rational; 2],
    pub on: [Rational; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncoupledEquilibria {
    pub off: [f64; 2],
    pub saddle: [f64; 2],
    pub on: [f64; 2],
}

impl UncoupledEquilibria {
    pub fn all(&self) -> [[f64; 2]; 3] {
        [self.off, self.saddle, self.on]
    }
}

pub fn uncoupled_equilibria_exact(p: &ModelParams) -> Result<ExactUncoupled> {
    let e = ExactPwa::new(p).ok_or(Error::NotPwaSubclass)?;
    let ratio = e.gain_ratio();
    if ratio <= exact::one() + &e.theta / &e.delta {
        return Err(Error::AssumptionViolated(
            "V1*V2/(delta*gamma1*gamma2) must exceed 1 + theta/delta for bistability".into(),
        ));
    }
    let on = [&e.v1 * &e.v2 / (&e.gamma1 * &e.gamma2), &e.v2 / &e.gamma2];
    let x2 = &e.v2 * &e.theta / (&e.delta * &e.gamma2) / (ratio - exact::one());
    let x1 = &e.v1 / &e.gamma1 * &x2;
    debug_assert!(x1 >= e.theta && x1 <= &e.theta + &e.delta);
    Ok(ExactUncoupled {
        off: [exact::zero(), exact::zero()],
        saddle: [x1, x2],
        on,
    })
}

pub fn uncoupled_equilibria(p: &ModelParams) -> Result<UncoupledEquilibria> {
    let e = uncoupled_equilibria_exact(p)?;
    let f = |pt: &[Rational; 2]| [exact::to_f64(&pt[0]), exact::to_f64(&pt[1])];
    Ok(UncoupledEquilibria {
        off: f(&e.off),
        saddle: f(&e.saddle),
        on: f(&e.on),
    })
}
