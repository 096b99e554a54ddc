//! Domain algebra and exhaustive equilibrium enumeration for the
//! piecewise-affine subclass (`g₁` piecewise-affine with threshold `θ` and
//! width `δ`, `g₂` identity).
//!
//! The first-species axis of each compartment splits into three regions:
//! OFF (`x₁ < θ`), the closed linear band (`θ ≤ x₁ ≤ θ+δ`) and ON
//! (`x₁ > θ+δ`). A domain code `α ∈ {-1, 0, +1}^N` picks one region per
//! compartment, and inside that domain the vector field is affine,
//! `ẋ = M_α x + b_α` with
//!
//! ```text
//! M_α = [ -(Γ₁+L)          V₁I ]      b_α = [ 0     ]
//!       [ (V₂/δ)diag(w)   -Γ₂  ]            [ V₂ β  ]
//! ```
//!
//! where `wᵢ = 1` on the linear band and 0 elsewhere. Expanding `V₂g₁(x₁ᵢ)`
//! on each branch gives `βᵢ = 1` (ON), `0` (OFF) and `-θ/δ` (linear band).

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CoupledNetwork;
use crate::network::sync_error;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MARGIN: f64 = 1e-9;
pub const DEFAULT_CAP: usize = 12;

// Pivot ratio of the full-pivot LU below which M_α is treated as singular.
const SINGULAR_RATIO: f64 = 1e-12;

/// Region code per compartment: -1 OFF, 0 linear band, +1 ON.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct DomainCode(Vec<i8>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    /// Every entry is ±1.
    Saturated,
    /// Every entry is 0.
    Linear,
    Mixed,
}

impl DomainCode {
    pub fn new(entries: Vec<i8>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::config("domain", "domain code must be non-empty"));
        }
        if let Some(bad) = entries.iter().find(|e| !(-1..=1).contains(*e)) {
            return Err(Error::config("domain", format!("entry {bad} is not in {{-1, 0, 1}}")));
        }
        Ok(Self(entries))
    }

    /// The `idx`-th code of `n` entries in lexicographic order (`-1 < 0 < 1`).
    pub fn from_index(mut idx: usize, n: usize) -> Self {
        let mut entries = vec![0i8; n];
        for slot in entries.iter_mut().rev() {
            *slot = (idx % 3) as i8 - 1;
            idx /= 3;
        }
        Self(entries)
    }

    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn kind(&self) -> DomainKind {
        if self.0.iter().all(|&a| a != 0) {
            DomainKind::Saturated
        } else if self.0.iter().all(|&a| a == 0) {
            DomainKind::Linear
        } else {
            DomainKind::Mixed
        }
    }

    /// Number of ON compartments `m` of a saturated code.
    pub fn activation(&self) -> Option<usize> {
        (self.kind() == DomainKind::Saturated).then(|| self.0.iter().filter(|&&a| a == 1).count())
    }

    /// Average activation `q̄ = m/N` of a saturated code.
    pub fn average_activation(&self) -> Option<f64> {
        self.activation().map(|m| m as f64 / self.len() as f64)
    }
}

impl TryFrom<Vec<i8>> for DomainCode {
    type Error = Error;

    fn try_from(v: Vec<i8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DomainCode> for Vec<i8> {
    fn from(d: DomainCode) -> Self {
        d.0
    }
}

impl fmt::Display for DomainCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.0 {
            f.write_str(match a {
                -1 => "-",
                0 => "0",
                _ => "+",
            })?;
        }
        Ok(())
    }
}

/// Region code of the first-species block of `x`.
///
/// With `tol > 0` points within `tol` of a band edge are assigned to the band.
pub fn domain_of(x: &[f64], theta: f64, delta: f64, tol: f64) -> DomainCode {
    let n = x.len() / 2;
    DomainCode(
        x[..n]
            .iter()
            .map(|&v| {
                if v > theta + delta + tol {
                    1
                } else if v < theta - tol {
                    -1
                } else {
                    0
                }
            })
            .collect(),
    )
}

/// Whether `x` lies in the closure of `α` enlarged by `tol`.
fn in_domain(x: &[f64], alpha: &DomainCode, theta: f64, delta: f64, tol: f64) -> bool {
    alpha.0.iter().zip(x).all(|(&a, &v)| match a {
        1 => v >= theta + delta - tol,
        -1 => v <= theta + tol,
        _ => v >= theta - tol && v <= theta + delta + tol,
    })
}

/// The affine vector field `M x + b` valid inside one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineRestriction {
    pub m: DMatrix<f64>,
    pub b: DVector<f64>,
}

pub fn affine_restriction(alpha: &DomainCode, net: &CoupledNetwork) -> Result<AffineRestriction> {
    let (theta, delta) = net.params().require_pwa()?;
    let n = net.n();
    if alpha.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: alpha.len(),
        });
    }
    let p = net.params();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(-net.shifted_laplacian()));
    let mut b = DVector::zeros(2 * n);
    for (i, &a) in alpha.0.iter().enumerate() {
        m[(i, n + i)] = p.v1;
        m[(n + i, n + i)] = -p.gamma2;
        match a {
            1 => b[n + i] = p.v2,
            0 => {
                m[(n + i, i)] = p.v2 / delta;
                b[n + i] = -p.v2 * theta / delta;
            }
            _ => {}
        }
    }
    Ok(AffineRestriction { m, b })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        })
    }
}

/// Stability class and spectrum (`[re, im]` pairs) of `m`.
pub fn classify_stability(m: &DMatrix<f64>, margin: f64) -> (Stability, Vec<[f64; 2]>) {
    let spectrum = eigenvalues(m);
    (classify_spectrum(&spectrum, margin), spectrum)
}

/// Complex spectrum as `[re, im]` pairs; empty if the eigensolver fails.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<[f64; 2]> {
    // faer's QR iteration handles the repeated eigenvalues of symmetric
    // coupling graphs, where nalgebra's Schur iteration can stall.
    let a = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    match a.eigenvalues() {
        Ok(ev) => ev.iter().map(|z| [z.re, z.im]).collect(),
        Err(e) => {
            log::warn!("eigenvalue computation failed: {e:?}");
            Vec::new()
        }
    }
}

fn classify_spectrum(spectrum: &[[f64; 2]], margin: f64) -> Stability {
    if spectrum.is_empty() {
        Stability::Marginal
    } else if spectrum.iter().any(|z| z[0] > margin) {
        Stability::Unstable
    } else if spectrum.iter().all(|z| z[0] < -margin) {
        Stability::Stable
    } else {
        Stability::Marginal
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub state: Vec<f64>,
    pub domain: DomainCode,
    pub kind: DomainKind,
    pub spectrum: Vec<[f64; 2]>,
    pub stability: Stability,
    pub synchronized: bool,
    /// Average activation `m/N`; saturated domains only.
    pub q_bar: Option<f64>,
}

/// A domain whose `M_α` is singular with a consistent right-hand side: its
/// equilibria form an affine set and are not counted as points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateDomain {
    pub domain: DomainCode,
    pub kind: DomainKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Enumeration {
    pub equilibria: Vec<EquilibriumRecord>,
    pub degenerate: Vec<DegenerateDomain>,
}

impl Enumeration {
    pub fn saturated_count(&self) -> usize {
        self.equilibria
            .iter()
            .filter(|r| r.kind == DomainKind::Saturated)
            .count()
    }

    pub fn stable_count(&self) -> usize {
        self.equilibria
            .iter()
            .filter(|r| r.stability == Stability::Stable)
            .count()
    }

    pub fn synchronized_count(&self) -> usize {
        self.equilibria.iter().filter(|r| r.synchronized).count()
    }

    /// Index of the first equilibrium within `tol` of `x` in the max norm.
    pub fn nearest_within(&self, x: &[f64], tol: f64) -> Option<usize> {
        self.equilibria.iter().position(|r| max_dist(&r.state, x) <= tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerateOptions {
    /// Membership tolerance in concentration units.
    pub tol: f64,
    /// Real-part margin for the stability classes.
    pub margin: f64,
    /// Largest `N` accepted.
    pub cap: usize,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            margin: DEFAULT_MARGIN,
            cap: DEFAULT_CAP,
        }
    }
}

fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

enum DomainSolve {
    Point(Vec<f64>),
    Degenerate,
    Empty,
}

fn solve_domain(r: &AffineRestriction) -> DomainSolve {
    let lu = r.m.clone().full_piv_lu();
    let pivots: Vec<f64> = lu.u().diagonal().iter().map(|v| v.abs()).collect();
    let max = pivots.iter().copied().fold(0.0, f64::max);
    let min = pivots.iter().copied().fold(f64::INFINITY, f64::min);
    let rhs = -&r.b;
    if max > 0.0 && min > SINGULAR_RATIO * max {
        if let Some(x) = lu.solve(&rhs) {
            return DomainSolve::Point(x.iter().copied().collect());
        }
    }
    // Singular: the set of equilibria is either empty or affine.
    let svd = r.m.clone().svd(true, true);
    let eps = SINGULAR_RATIO * svd.singular_values.max().max(1.0);
    match svd.solve(&rhs, eps) {
        Ok(x) => {
            let residual = (&r.m * &x - &rhs).amax();
            if residual <= 1e-9 * (1.0 + rhs.amax()) {
                DomainSolve::Degenerate
            } else {
                DomainSolve::Empty
            }
        }
        Err(_) => DomainSolve::Empty,
    }
}

/// Enumerate equilibria over all `3^N` domains with default options and
/// membership tolerance `tol`.
pub fn enumerate_equilibria(net: &CoupledNetwork, tol: f64) -> Result<Enumeration> {
    enumerate_equilibria_with(
        net,
        &EnumerateOptions {
            tol,
            ..EnumerateOptions::default()
        },
    )
}

/// Solve `M_α x = -b_α` in every domain and keep solutions that lie in their
/// domain. Solutions on a shared boundary found from several domains are
/// merged when within `10·tol`, preferring the domain whose predicate holds
/// without tolerance. Results are ordered lexicographically by domain code.
pub fn enumerate_equilibria_with(net: &CoupledNetwork, opts: &EnumerateOptions) -> Result<Enumeration> {
    let (theta, delta) = net.params().require_pwa()?;
    let n = net.n();
    if n > opts.cap {
        return Err(Error::TooManyDomains { n, cap: opts.cap });
    }
    let total = 3usize.pow(n as u32);
    let candidates: Vec<(DomainCode, DomainSolve, AffineRestriction)> = (0..total)
        .into_par_iter()
        .filter_map(|idx| {
            let alpha = DomainCode::from_index(idx, n);
            let r = affine_restriction(&alpha, net).ok()?;
            match solve_domain(&r) {
                DomainSolve::Point(x) if in_domain(&x, &alpha, theta, delta, opts.tol) => {
                    Some((alpha, DomainSolve::Point(x), r))
                }
                DomainSolve::Degenerate => Some((alpha, DomainSolve::Degenerate, r)),
                _ => None,
            }
        })
        .collect();

    let mut out = Enumeration::default();
    let mut strict_flags: Vec<bool> = Vec::new();
    for (alpha, solve, r) in candidates {
        match solve {
            DomainSolve::Point(x) => {
                let strict = domain_of(&x, theta, delta, 0.0) == alpha;
                if let Some(pos) = out
                    .equilibria
                    .iter()
                    .position(|e| max_dist(&e.state, &x) <= 10.0 * opts.tol)
                {
                    if strict && !strict_flags[pos] {
                        out.equilibria[pos] = make_record(x, alpha, &r, opts);
                        strict_flags[pos] = true;
                    }
                    continue;
                }
                out.equilibria.push(make_record(x, alpha, &r, opts));
                strict_flags.push(strict);
            }
            DomainSolve::Degenerate => {
                log::warn!("domain {alpha} has a singular restriction with a continuum of equilibria");
                out.degenerate.push(DegenerateDomain {
                    kind: alpha.kind(),
                    domain: alpha,
                });
            }
            DomainSolve::Empty => {}
        }
    }
    Ok(out)
}

fn make_record(x: Vec<f64>, alpha: DomainCode, r: &AffineRestriction, opts: &EnumerateOptions) -> EquilibriumRecord {
    let n = alpha.len();
    let (stability, spectrum) = classify_stability(&r.m, opts.margin);
    let synchronized = sync_error(&x[..n]) < opts.tol && sync_error(&x[n..]) < opts.tol;
    EquilibriumRecord {
        kind: alpha.kind(),
        q_bar: alpha.average_activation(),
        domain: alpha,
        spectrum,
        stability,
        synchronized,
        state: x,
    }
}

/// Closed-form equilibrium candidate of a saturated domain under all-to-all
/// coupling, with whether it satisfies the domain's strict inequalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturatedCandidate {
    pub state: Vec<f64>,
    pub on_level: f64,
    pub off_level: f64,
    pub valid: bool,
}

/// With `V = V₁V₂/(γ₁γ₂)`, `m` ON compartments and `q̄ = m/N`, ON entries of
/// `X̄₁` equal `V(γ₁ + Nkq̄)/(Nk + γ₁)`, OFF entries `VNkq̄/(Nk + γ₁)`, and
/// `X̄₂ = (V₂/γ₂)G₁(X̄₁)`.
pub fn saturated_equilibrium_candidate(alpha: &DomainCode, net: &CoupledNetwork) -> Result<SaturatedCandidate> {
    let (theta, delta) = net.params().require_pwa()?;
    let m = alpha.activation().ok_or(Error::NotSaturated)?;
    let n = net.n();
    if alpha.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: alpha.len(),
        });
    }
    let k = net.graph().all_to_all_gain().ok_or(Error::NotAllToAll)?;
    let p = net.params();
    let v = p.v1 * p.v2 / (p.gamma1 * p.gamma2);
    let nk = n as f64 * k;
    let nkq = k * m as f64;
    let on_level = v * (p.gamma1 + nkq) / (nk + p.gamma1);
    let off_level = v * nkq / (nk + p.gamma1);
    let mut state: Vec<f64> = alpha
        .0
        .iter()
        .map(|&a| if a == 1 { on_level } else { off_level })
        .collect();
    state.extend(alpha.0.iter().map(|&a| if a == 1 { p.v2 / p.gamma2 } else { 0.0 }));
    let on_ok = m == 0 || on_level > theta + delta;
    let off_ok = m == n || off_level < theta;
    Ok(SaturatedCandidate {
        state,
        on_level,
        off_level,
        valid: on_ok && off_ok,
    })
}

/// One row of an equilibrium count sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub k: f64,
    pub total: usize,
    pub saturated: usize,
    pub stable: usize,
    pub synchronized: usize,
    pub degenerate: usize,
    pub all_synchronized: bool,
}

impl CountRow {
    fn from_enumeration(k: f64, e: &Enumeration) -> Self {
        Self {
            k,
            total: e.equilibria.len(),
            saturated: e.saturated_count(),
            stable: e.stable_count(),
            synchronized: e.synchronized_count(),
            degenerate: e.degenerate.len(),
            all_synchronized: e.equilibria.iter().all(|r| r.synchronized),
        }
    }
}

/// Enumerate at every `k` of `k_grid` with the topology of `net` rescaled to
/// gain `k`. Rows follow the grid order.
pub fn count_vs_k(net: &CoupledNetwork, k_grid: &[f64], opts: &EnumerateOptions) -> Result<Vec<CountRow>> {
    net.params().require_pwa()?;
    k_grid
        .par_iter()
        .map(|&k| {
            let e = enumerate_equilibria_with(&net.with_gain(k)?, opts)?;
            if !e.degenerate.is_empty() {
                log::warn!(
                    "k = {k}: {} degenerate domains excluded from counts",
                    e.degenerate.len()
                );
            }
            Ok(CountRow::from_enumeration(k, &e))
        })
        .collect()
}

/// CSV with header `k,total,saturated,stable,synchronized`.
pub fn write_counts_csv<W: std::io::Write>(rows: &[CountRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "total", "saturated", "stable", "synchronized"])?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            r.total.to_string(),
            r.saturated.to_string(),
            r.stable.to_string(),
            r.synchronized.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `intervals + 1` evenly spaced values from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, intervals: usize) -> Vec<f64> {
    if intervals == 0 {
        return vec![lo];
    }
    let step = (hi - lo) / intervals as f64;
    (0..=intervals)
        .map(|i| if i == intervals { hi } else { lo + step * i as f64 })
        .collect()
}
