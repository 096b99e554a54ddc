//! Trajectory integration and trajectory diagnostics.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{invariant_box, CoupledNetwork, InvariantBox};

pub const RK45_ATOL: f64 = 1e-9;
pub const RK45_RTOL: f64 = 1e-7;
pub const MIN_STEP: f64 = 1e-12;

// Initial states may sit on the box faces up to float noise.
const BOX_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    #[default]
    Rk45,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rk4" => Ok(Method::Rk4),
            "rk45" | "dopri5" => Ok(Method::Rk45),
            other => Err(Error::config("method", format!("unknown method `{other}`"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rk4 => "rk4",
            Method::Rk45 => "rk45",
        })
    }
}

/// Sampled solution; `states[i]` is the `[X₁; X₂]` state at `times[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: states.len(),
            });
        }
        if times
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::InvalidParameter {
                name: "times",
                value: f64::NAN,
                reason: "sample times must be strictly increasing",
            });
        }
        if let Some(first) = states.first() {
            if let Some(bad) = states.iter().find(|s| s.len() != first.len()) {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    got: bad.len(),
                });
            }
        }
        Ok(Self { times, states })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    /// CSV with header `t,x1_1..x1_N,x2_1..x2_N`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let dim = self.states.first().map_or(0, Vec::len);
        let n = dim / 2;
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x1_{i}")));
        header.extend((1..=n).map(|i| format!("x2_{i}")));
        w.write_record(&header)?;
        for (t, x) in self.times.iter().zip(&self.states) {
            let mut row = Vec::with_capacity(dim + 1);
            row.push(t.to_string());
            row.extend(x.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Rhs<'a> {
    net: &'a CoupledNetwork,
}

impl Rhs<'_> {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        self.net.vector_field_into(x, out);
    }
}

fn axpy(out: &mut [f64], x: &[f64], h: f64, terms: &[(&[f64], f64)]) {
    for i in 0..out.len() {
        let mut acc = 0.0;
        for (k, c) in terms {
            acc += c * k[i];
        }
        out[i] = x[i] + h * acc;
    }
}

fn check_finite(x: &[f64], t: f64) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteState { t })
    }
}

/// Integrate from `x0` over `[0, t_end]`.
///
/// With [`Method::Rk4`] `dt` is the fixed step and every step is recorded.
/// With [`Method::Rk45`] `dt` is the output stride; internal steps adapt under
/// Dormand–Prince 5(4) error control ([`RK45_ATOL`], [`RK45_RTOL`]) and are
/// truncated to land on every output time.
pub fn integrate(net: &CoupledNetwork, x0: &[f64], t_end: f64, dt: f64, method: Method) -> Result<Trajectory> {
    if x0.len() != net.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.state_dim(),
            got: x0.len(),
        });
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "t_end",
            value: t_end,
            reason: "duration must be finite and > 0",
        });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            reason: "step must be finite and > 0",
        });
    }
    check_finite(x0, 0.0)?;
    if let Ok(b) = invariant_box(net.params()) {
        let excursion = b.excursion(x0);
        if excursion > BOX_SLACK {
            return Err(Error::OutsideInvariantBox {
                excursion,
                x1_max: b.x1_max,
                x2_max: b.x2_max,
            });
        }
    }
    let rhs = Rhs { net };
    match method {
        Method::Rk4 => rk4(&rhs, x0, t_end, dt),
        Method::Rk45 => dopri5(&rhs, x0, t_end, dt),
    }
}

/// Integrate several initial states in parallel; results keep input order.
pub fn integrate_batch(
    net: &CoupledNetwork,
    x0s: &[Vec<f64>],
    t_end: f64,
    dt: f64,
    method: Method,
) -> Vec<Result<Trajectory>> {
    x0s.par_iter().map(|x0| integrate(net, x0, t_end, dt, method)).collect()
}

fn rk4(rhs: &Rhs<'_>, x0: &[f64], t_end: f64, dt: f64) -> Result<Trajectory> {
    let dim = x0.len();
    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    );
    times.push(0.0);
    states.push(x.clone());
    for step in 1..=steps {
        let t0 = (step - 1) as f64 * dt;
        let t1 = if step == steps { t_end } else { step as f64 * dt };
        let h = t1 - t0;
        rhs.eval(&x, &mut k1);
        axpy(&mut tmp, &x, h, &[(&k1, 0.5)]);
        rhs.eval(&tmp, &mut k2);
        axpy(&mut tmp, &x, h, &[(&k2, 0.5)]);
        rhs.eval(&tmp, &mut k3);
        axpy(&mut tmp, &x, h, &[(&k3, 1.0)]);
        rhs.eval(&tmp, &mut k4);
        for i in 0..dim {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        check_finite(&x, t1)?;
        times.push(t1);
        states.push(x.clone());
    }
    Ok(Trajectory { times, states })
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn dopri5(rhs: &Rhs<'_>, x0: &[f64], t_end: f64, stride: f64) -> Result<Trajectory> {
    let dim = x0.len();
    let outputs = (t_end / stride - 1e-9).ceil().max(1.0) as usize;
    let mut times = Vec::with_capacity(outputs + 1);
    let mut states = Vec::with_capacity(outputs + 1);
    let mut x = x0.to_vec();
    times.push(0.0);
    states.push(x.clone());

    let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    let mut x_new = vec![0.0; dim];
    rhs.eval(&x, &mut k[0]);

    let mut t = 0.0;
    let mut h = (stride * 0.1).min(0.01);
    for out_idx in 1..=outputs {
        let t_out = if out_idx == outputs {
            t_end
        } else {
            out_idx as f64 * stride
        };
        while t < t_out {
            let remaining = t_out - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };

            let (k1, rest) = k.split_at_mut(1);
            let k1 = &k1[0];
            axpy(&mut tmp, &x, step, &[(k1, A21)]);
            rhs.eval(&tmp, &mut rest[0]);
            axpy(&mut tmp, &x, step, &[(k1, A31), (&rest[0], A32)]);
            rhs.eval(&tmp, &mut rest[1]);
            axpy(&mut tmp, &x, step, &[(k1, A41), (&rest[0], A42), (&rest[1], A43)]);
            rhs.eval(&tmp, &mut rest[2]);
            axpy(
                &mut tmp,
                &x,
                step,
                &[(k1, A51), (&rest[0], A52), (&rest[1], A53), (&rest[2], A54)],
            );
            rhs.eval(&tmp, &mut rest[3]);
            axpy(
                &mut tmp,
                &x,
                step,
                &[
                    (k1, A61),
                    (&rest[0], A62),
                    (&rest[1], A63),
                    (&rest[2], A64),
                    (&rest[3], A65),
                ],
            );
            rhs.eval(&tmp, &mut rest[4]);
            axpy(
                &mut x_new,
                &x,
                step,
                &[(k1, B1), (&rest[1], B3), (&rest[2], B4), (&rest[3], B5), (&rest[4], B6)],
            );
            rhs.eval(&x_new, &mut rest[5]);

            let mut err_sq = 0.0;
            for i in 0..dim {
                let e = step
                    * (E1 * k1[i]
                        + E3 * rest[1][i]
                        + E4 * rest[2][i]
                        + E5 * rest[3][i]
                        + E6 * rest[4][i]
                        + E7 * rest[5][i]);
                let scale = RK45_ATOL + RK45_RTOL * x[i].abs().max(x_new[i].abs());
                err_sq += (e / scale) * (e / scale);
            }
            let err = (err_sq / dim as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::NonFiniteState { t });
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };

            if err <= 1.0 {
                t = if last { t_out } else { t + step };
                std::mem::swap(&mut x, &mut x_new);
                // FSAL: the last stage is the derivative at the new point.
                let k7 = std::mem::take(&mut k[6]);
                k[6] = std::mem::replace(&mut k[0], k7);
                check_finite(&x, t)?;
                if !last {
                    h = step * factor;
                } else {
                    h = h.max(step * factor);
                }
            } else {
                h = step * factor.min(1.0);
                if h < MIN_STEP {
                    return Err(Error::StepUnderflow { t, min_step: MIN_STEP });
                }
            }
        }
        times.push(t_out);
        states.push(x.clone());
    }
    Ok(Trajectory { times, states })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Convergence {
    Converged { state: Vec<f64> },
    NotConverged { residual: f64, tail_spread: f64 },
}

impl Convergence {
    pub fn is_converged(&self) -> bool {
        matches!(self, Convergence::Converged { .. })
    }

    pub fn state(&self) -> Option<&[f64]> {
        match self {
            Convergence::Converged { state } => Some(state),
            Convergence::NotConverged { .. } => None,
        }
    }
}

/// Converged when the vector field at the final sample is below `tol` in the
/// max norm and every sample in the last 10% lies within `tol` of the final
/// state.
pub fn detect_convergence(traj: &Trajectory, net: &CoupledNetwork, tol: f64) -> Convergence {
    let Some(last) = traj.final_state() else {
        return Convergence::NotConverged {
            residual: f64::INFINITY,
            tail_spread: f64::INFINITY,
        };
    };
    let mut f = vec![0.0; last.len()];
    net.vector_field_into(last, &mut f);
    let residual = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tail_len = (traj.len() / 10).max(1);
    let tail_spread = traj.states[traj.len() - tail_len..]
        .iter()
        .map(|s| s.iter().zip(last).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
        .fold(0.0, f64::max);
    if residual < tol && tail_spread < tol {
        Convergence::Converged { state: last.to_vec() }
    } else {
        Convergence::NotConverged { residual, tail_spread }
    }
}

/// Largest distance of any sample component outside the box bounds.
pub fn box_violation(traj: &Trajectory, b: &InvariantBox) -> f64 {
    traj.states.iter().map(|s| b.excursion(s)).fold(0.0, f64::max)
}

pub type DensityFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Weight `ρᵢ(u, y)` of one input-output channel.
#[derive(Clone)]
pub enum ChannelDensity {
    Constant(f64),
    Custom(DensityFn),
}

impl fmt::Debug for ChannelDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelDensity::Constant(c) => write!(f, "Constant({c})"),
            ChannelDensity::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

const SIMPSON_INTERVALS: usize = 32;

impl ChannelDensity {
    fn eval(&self, u: f64, y: f64) -> f64 {
        match self {
            ChannelDensity::Constant(c) => *c,
            ChannelDensity::Custom(f) => f(u, y),
        }
    }

    /// Signed `∫₀^u ρ(η, y) dη`.
    pub fn integral(&self, u: f64, y: f64) -> f64 {
        match self {
            ChannelDensity::Constant(c) => c * u,
            ChannelDensity::Custom(f) => {
                let h = u / SIMPSON_INTERVALS as f64;
                let mut acc = f(0.0, y) + f(u, y);
                for i in 1..SIMPSON_INTERVALS {
                    let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                    acc += w * f(i as f64 * h, y);
                }
                acc * h / 3.0
            }
        }
    }
}

/// Per-channel density functions for the counterclockwise functional.
#[derive(Debug, Clone)]
pub struct DensityFunction {
    channels: Vec<ChannelDensity>,
}

impl DensityFunction {
    /// `ρᵢ ≡ 1` on every channel.
    pub fn uniform(n: usize) -> Self {
        Self {
            channels: vec![ChannelDensity::Constant(1.0); n],
        }
    }

    /// Rejects channels that are non-positive anywhere on a sampling grid of
    /// `u ∈ [-10, 10]`, `y ∈ [0, 10]`.
    pub fn new(channels: Vec<ChannelDensity>) -> Result<Self> {
        for (i, ch) in channels.iter().enumerate() {
            for a in 0..=40 {
                for b in 0..=40 {
                    let u = -10.0 + 0.5 * a as f64;
                    let y = 0.25 * b as f64;
                    let v = ch.eval(u, y);
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(Error::InvalidDensity(format!(
                            "channel {i} has density {v} at (u = {u}, y = {y})"
                        )));
                    }
                }
            }
        }
        Ok(Self { channels })
    }

    pub fn channels(&self) -> &[ChannelDensity] {
        &self.channels
    }
}

/// Running value of `∫₀ᵗ ẏᵀ ∫₀^u ρ(η, y) dη dt` with `y = X₁` and `u = -L X₁`.
///
/// `ẏ` is the first block of the vector field at each sample; the time
/// integral is accumulated by the trapezoidal rule.
pub fn ccw_functional(traj: &Trajectory, net: &CoupledNetwork, rho: &DensityFunction) -> Result<Vec<f64>> {
    let n = net.n();
    if rho.channels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rho.channels.len(),
        });
    }
    let l = net.laplacian().matrix();
    let mut f = vec![0.0; 2 * n];
    let integrand: Vec<f64> = traj
        .states
        .iter()
        .map(|x| {
            net.vector_field_into(x, &mut f);
            (0..n)
                .map(|i| {
                    let u: f64 = -(0..n).map(|j| l[(i, j)] * x[j]).sum::<f64>();
                    f[i] * rho.channels[i].integral(u, x[i])
                })
                .sum()
        })
        .collect();
    let mut running = Vec::with_capacity(integrand.len());
    let mut acc = 0.0;
    for (idx, v) in integrand.iter().enumerate() {
        if idx > 0 {
            let dt = traj.times[idx] - traj.times[idx - 1];
            acc += 0.5 * dt * (v + integrand[idx - 1]);
        }
        running.push(acc);
    }
    Ok(running)
}

/// Uniform i.i.d. samples in `B^N`, reproducible for a fixed seed.
pub fn random_initial_conditions(b: &InvariantBox, n: usize, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| (0..2 * n).map(|i| rng.random::<f64>() * b.upper(i, n)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{uncoupled_equilibria, ModelParams};
    use crate::network::{build_topology, sync_error, TopologyKind};
    use crate::regulatory::RegulatoryFunction;

    fn fig3() -> ModelParams {
        ModelParams::new(
            1.0,
            1.0,
            1.0,
            1.0,
            RegulatoryFunction::pwa(0.45, 0.1).unwrap(),
            RegulatoryFunction::Identity,
        )
        .unwrap()
    }

    fn all_to_all(n: usize, k: f64) -> CoupledNetwork {
        CoupledNetwork::new(fig3(), build_topology(TopologyKind::AllToAll, n, k, None).unwrap())
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn equilibrium_start_stays_put() {
        let net = all_to_all(3, 0.4);
        let off = net.embed_synchronized([0.0, 0.0]);
        for method in [Method::Rk4, Method::Rk45] {
            let traj = integrate(&net, &off, 20.0, 0.1, method).unwrap();
            for s in &traj.states {
                assert!(max_diff(s, &off) < 1e-10);
            }
        }
    }

    #[test]
    fn single_compartment_reaches_on_state() {
        let net = all_to_all(1, 0.0);
        let traj = integrate(&net, &[0.9, 0.9], 50.0, 0.05, Method::Rk45).unwrap();
        let oracle = integrate(&net, &[0.9, 0.9], 50.0, 1e-4, Method::Rk4).unwrap();
        let end = traj.final_state().unwrap();
        assert!(max_diff(end, &[1.0, 1.0]) < 1e-6);
        assert!(max_diff(end, oracle.final_state().unwrap()) < 1e-6);
    }

    #[test]
    fn strong_coupling_synchronizes() {
        let net = all_to_all(5, 2.0);
        let b = invariant_box(net.params()).unwrap();
        for x0 in random_initial_conditions(&b, 5, 5, 99) {
            let traj = integrate(&net, &x0, 200.0, 0.5, Method::Rk45).unwrap();
            let end = traj.final_state().unwrap();
            assert!(sync_error(&end[..5]) < 1e-6);
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        let net = all_to_all(1, 0.0);
        let x0 = [0.9, 0.9];
        let t_end = 1.0;
        let reference = integrate(&net, &x0, t_end, 1e-4, Method::Rk4).unwrap();
        let reference = reference.final_state().unwrap();
        let err = |dt: f64| {
            let t = integrate(&net, &x0, t_end, dt, Method::Rk4).unwrap();
            max_diff(t.final_state().unwrap(), reference)
        };
        let ratio = err(0.2) / err(0.1);
        assert!(ratio >= 8.0, "error ratio {ratio}");
    }

    #[test]
    fn invalid_inputs() {
        let net = all_to_all(2, 1.0);
        assert!(matches!(
            integrate(&net, &[2.0, 0.0, 0.0, 0.0], 1.0, 0.1, Method::Rk45),
            Err(Error::OutsideInvariantBox { .. })
        ));
        assert!(integrate(&net, &[0.1; 4], -1.0, 0.1, Method::Rk45).is_err());
        assert!(integrate(&net, &[0.1; 4], 1.0, 0.0, Method::Rk4).is_err());
        assert!(integrate(&net, &[0.1; 3], 1.0, 0.1, Method::Rk4).is_err());
    }

    #[test]
    fn convergence_detection() {
        let net = all_to_all(1, 0.0);
        let on = vec![1.0, 1.0];
        let constant = Trajectory::new(vec![0.0, 1.0, 2.0], vec![on.clone(); 3]).unwrap();
        assert_eq!(
            detect_convergence(&constant, &net, 1e-8),
            Convergence::Converged { state: on }
        );
        let short = integrate(&net, &[0.9, 0.9], 1.0, 0.1, Method::Rk45).unwrap();
        assert!(!detect_convergence(&short, &net, 1e-8).is_converged());
    }

    #[test]
    fn box_violation_examples() {
        let b = invariant_box(&fig3()).unwrap();
        let origin = Trajectory::new(vec![0.0, 1.0], vec![vec![0.0, 0.0]; 2]).unwrap();
        assert_eq!(box_violation(&origin, &b), 0.0);
        let out = Trajectory::new(vec![0.0, 1.0], vec![vec![0.2, 0.2], vec![b.x1_max + 1.0, 0.5]]).unwrap();
        assert!((box_violation(&out, &b) - 1.0).abs() < 1e-15);

        let net = all_to_all(1, 0.0);
        let traj = integrate(&net, &[0.3, 0.8], 30.0, 0.1, Method::Rk45).unwrap();
        assert!(box_violation(&traj, &b) <= 1e-9);
    }

    #[test]
    fn ccw_constant_trajectory_is_zero() {
        let net = all_to_all(3, 1.0);
        let eq = uncoupled_equilibria(net.params()).unwrap();
        let x = net.embed_synchronized(eq.saddle);
        let traj = Trajectory::new(vec![0.0, 1.0, 2.0], vec![x; 3]).unwrap();
        let ccw = ccw_functional(&traj, &net, &DensityFunction::uniform(3)).unwrap();
        assert!(ccw.iter().all(|v| v.abs() < 1e-12));
    }

    // With ρ ≡ 1 the integrand is -ẏᵀLy = -d/dt(yᵀLy/2), so the running
    // value equals (y₀ᵀLy₀ - yᵀLy)/2.
    #[test]
    fn ccw_uniform_density_matches_quadratic_form() {
        let net = all_to_all(4, 0.3);
        let b = invariant_box(net.params()).unwrap();
        let x0 = &random_initial_conditions(&b, 4, 1, 5)[0];
        let traj = integrate(&net, x0, 20.0, 0.005, Method::Rk45).unwrap();
        let ccw = ccw_functional(&traj, &net, &DensityFunction::uniform(4)).unwrap();
        let l = net.laplacian().matrix();
        let q = |x: &[f64]| {
            let y = nalgebra::DVector::from_column_slice(&x[..4]);
            0.5 * (y.transpose() * l * &y)[(0, 0)]
        };
        let expected = q(x0) - q(traj.final_state().unwrap());
        assert!((ccw.last().unwrap() - expected).abs() < 1e-4);
    }

    #[test]
    fn custom_density_integral() {
        let ch = ChannelDensity::Custom(Arc::new(|u, _| 1.0 + u * u));
        // ∫₀² (1 + η²) dη = 2 + 8/3
        assert!((ch.integral(2.0, 0.0) - (2.0 + 8.0 / 3.0)).abs() < 1e-12);
        assert!((ch.integral(-2.0, 0.0) + (2.0 + 8.0 / 3.0)).abs() < 1e-12);
        assert!(DensityFunction::new(vec![ch]).is_ok());
        let bad = ChannelDensity::Custom(Arc::new(|u, _| u));
        assert!(matches!(DensityFunction::new(vec![bad]), Err(Error::InvalidDensity(_))));
        assert!(DensityFunction::new(vec![ChannelDensity::Constant(0.0)]).is_err());
    }

    #[test]
    fn random_initial_conditions_properties() {
        let b = InvariantBox {
            x1_max: 2.0,
            x2_max: 0.5,
        };
        let a = random_initial_conditions(&b, 3, 50, 7);
        assert_eq!(a, random_initial_conditions(&b, 3, 50, 7));
        assert_ne!(a, random_initial_conditions(&b, 3, 50, 8));
        assert!(a.iter().all(|x| b.contains(x)));

        let many = random_initial_conditions(&b, 2, 10_000, 1);
        for i in 0..4 {
            let upper = b.upper(i, 2);
            let mean = many.iter().map(|x| x[i]).sum::<f64>() / many.len() as f64;
            // σ of the sample mean of U(0, a) is a / sqrt(12 · 10⁴)
            let sigma = upper / (12.0 * 10_000.0_f64).sqrt();
            assert!((mean - upper / 2.0).abs() < 3.0 * sigma, "coordinate {i} mean {mean}");
        }
    }

    #[test]
    fn trajectory_csv_header() {
        let traj = Trajectory::new(vec![0.0, 0.5], vec![vec![0.1, 0.2, 0.3, 0.4]; 2]).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x1_1,x1_2,x2_1,x2_2\n0,0.1,0.2,0.3,0.4\n"));
        assert!(Trajectory::new(vec![0.0, 0.0], vec![vec![0.0]; 2]).is_err());
    }
}
