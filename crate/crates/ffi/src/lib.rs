//! C ABI over `bistable-net`.
//!
//! Objects cross the boundary as opaque pointers created by a `bn_*_new` or
//! producer call and released with the matching `bn_*_free`. Every fallible
//! call returns a [`BnStatus`]; on failure the message is available from
//! [`bn_last_error_message`] on the same thread. Panics are caught and
//! reported as [`BnStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bistable_net::config::RunConfig;
use bistable_net::model::{CoupledNetwork, ModelParams};
use bistable_net::network::{build_topology, TopologyKind};
use bistable_net::pwa::{enumerate_equilibria, Enumeration, Stability};
use bistable_net::regulatory::RegulatoryFunction;
use bistable_net::simulate::{integrate, Method, Trajectory};
use bistable_net::thresholds::{k_lambda, k_s};
use bistable_net::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    Unsupported = 4,
    Numerical = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnTopology {
    AllToAll = 0,
    Star = 1,
    Loop = 2,
    Line = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnMethod {
    Rk4 = 0,
    Rk45 = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnStability {
    Stable = 0,
    Unstable = 1,
    Marginal = 2,
}

/// A coupled network: model parameters plus diffusion graph.
pub struct BnNetwork(CoupledNetwork);

/// Equilibria of a piecewise-affine network.
pub struct BnEquilibria(Enumeration);

/// Sampled trajectory.
pub struct BnTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BnStatus {
    match e {
        Error::Config { .. } | Error::Json(_) => BnStatus::InvalidConfig,
        Error::AssumptionViolated(_)
        | Error::NotPwaSubclass
        | Error::NotSaturated
        | Error::NotAllToAll
        | Error::ReductionUnavailable
        | Error::TooManyDomains { .. } => BnStatus::Unsupported,
        Error::StepUnderflow { .. } | Error::NonFiniteState { .. } => BnStatus::Numerical,
        Error::Io(_) | Error::Csv(_) => BnStatus::Io,
        _ => BnStatus::InvalidArgument,
    }
}

struct Failure(BnStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(BnStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BnStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            BnStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn check_len(got: usize, expected: usize, what: &str) -> Result<(), Failure> {
    if got < expected {
        return Err(Failure(
            BnStatus::InvalidArgument,
            format!("{what} holds {got} values, need {expected}"),
        ));
    }
    Ok(())
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread, or null if none failed.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Network of `n` compartments with a PWA activator `g₁`, identity `g₂` and
/// one of the named topologies at uniform gain `k`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn bn_network_new_pwa(
    gamma1: f64,
    gamma2: f64,
    v1: f64,
    v2: f64,
    theta: f64,
    delta: f64,
    topology: BnTopology,
    n: usize,
    k: f64,
    out: *mut *mut BnNetwork,
) -> BnStatus {
    guard(|| {
        let g1 = RegulatoryFunction::pwa(theta, delta)?;
        let params = ModelParams::new(gamma1, gamma2, v1, v2, g1, RegulatoryFunction::Identity)?;
        let kind = match topology {
            BnTopology::AllToAll => TopologyKind::AllToAll,
            BnTopology::Star => TopologyKind::Star,
            BnTopology::Loop => TopologyKind::Loop,
            BnTopology::Line => TopologyKind::Line,
        };
        let graph = build_topology(kind, n, k, None)?;
        emit(out, BnNetwork(CoupledNetwork::new(params, graph)))
    })
}

/// Network described by a JSON run configuration (the CLI's `--config` format).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` as in [`bn_network_new_pwa`].
#[no_mangle]
pub unsafe extern "C" fn bn_network_from_json(json: *const c_char, out: *mut *mut BnNetwork) -> BnStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure(BnStatus::InvalidConfig, format!("configuration is not UTF-8: {e}")))?;
        let cfg = RunConfig::from_json(text)?;
        emit(out, BnNetwork(cfg.network()))
    })
}

/// # Safety
/// `net` must come from a `bn_network_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bn_network_free(net: *mut BnNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Number of compartments; the state dimension is twice this.
///
/// # Safety
/// `net` must be a live handle; `n` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bn_network_size(net: *const BnNetwork, n: *mut usize) -> BnStatus {
    guard(|| {
        let net = deref(net, "network")?;
        if n.is_null() {
            return Err(null("n"));
        }
        *n = net.0.n();
        Ok(())
    })
}

/// Vector field at `x` (`len` = 2N values, `[X₁; X₂]`) written to `dx`.
///
/// # Safety
/// `x` and `dx` must point to at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bn_vector_field(net: *const BnNetwork, x: *const f64, dx: *mut f64, len: usize) -> BnStatus {
    guard(|| {
        let net = deref(net, "network")?;
        let dim = net.0.state_dim();
        check_len(len, dim, "state buffer")?;
        let f = net.0.vector_field(&slice(x, dim, "x")?[..dim])?;
        slice_mut(dx, dim, "dx")?.copy_from_slice(&f);
        Ok(())
    })
}

/// Every equilibrium of a piecewise-affine network, with domain membership
/// tolerance `tol`.
///
/// # Safety
/// `net` must be a live handle; `out` as in [`bn_network_new_pwa`].
#[no_mangle]
pub unsafe extern "C" fn bn_equilibria_enumerate(
    net: *const BnNetwork,
    tol: f64,
    out: *mut *mut BnEquilibria,
) -> BnStatus {
    guard(|| {
        let net = deref(net, "network")?;
        emit(out, BnEquilibria(enumerate_equilibria(&net.0, tol)?))
    })
}

/// # Safety
/// `eq` must come from [`bn_equilibria_enumerate`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bn_equilibria_free(eq: *mut BnEquilibria) {
    if !eq.is_null() {
        drop(Box::from_raw(eq));
    }
}

/// # Safety
/// `eq` must be a live handle or null (reported as zero).
#[no_mangle]
pub unsafe extern "C" fn bn_equilibria_count(eq: *const BnEquilibria) -> usize {
    eq.as_ref().map_or(0, |e| e.0.equilibria.len())
}

/// State, stability and domain code (`-1`, `0`, `1` per compartment) of
/// equilibrium `index`. `state` needs 2N doubles and `domain` N bytes; either
/// may be null to skip it.
///
/// # Safety
/// Non-null buffers must hold at least `state_len` doubles / `domain_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn bn_equilibria_get(
    eq: *const BnEquilibria,
    index: usize,
    state: *mut f64,
    state_len: usize,
    domain: *mut i8,
    domain_len: usize,
    stability: *mut BnStability,
) -> BnStatus {
    guard(|| {
        let eq = deref(eq, "equilibria")?;
        let rec = eq.0.equilibria.get(index).ok_or_else(|| {
            Failure(
                BnStatus::InvalidArgument,
                format!("index {index} out of range ({} equilibria)", eq.0.equilibria.len()),
            )
        })?;
        if !state.is_null() {
            check_len(state_len, rec.state.len(), "state buffer")?;
            slice_mut(state, rec.state.len(), "state")?.copy_from_slice(&rec.state);
        }
        if !domain.is_null() {
            let code = rec.domain.entries();
            check_len(domain_len, code.len(), "domain buffer")?;
            slice_mut(domain, code.len(), "domain")?.copy_from_slice(code);
        }
        if !stability.is_null() {
            *stability = match rec.stability {
                Stability::Stable => BnStability::Stable,
                Stability::Unstable => BnStability::Unstable,
                Stability::Marginal => BnStability::Marginal,
            };
        }
        Ok(())
    })
}

/// Integrate from `x0` over `[0, t_end]`. `dt` is the fixed step for RK4 and
/// the output stride for RK45.
///
/// # Safety
/// `x0` must point to `len` doubles; `out` as in [`bn_network_new_pwa`].
#[no_mangle]
pub unsafe extern "C" fn bn_simulate(
    net: *const BnNetwork,
    x0: *const f64,
    len: usize,
    t_end: f64,
    dt: f64,
    method: BnMethod,
    out: *mut *mut BnTrajectory,
) -> BnStatus {
    guard(|| {
        let net = deref(net, "network")?;
        let x0 = slice(x0, len, "x0")?;
        let method = match method {
            BnMethod::Rk4 => Method::Rk4,
            BnMethod::Rk45 => Method::Rk45,
        };
        emit(out, BnTrajectory(integrate(&net.0, x0, t_end, dt, method)?))
    })
}

/// # Safety
/// `traj` must come from [`bn_simulate`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bn_trajectory_free(traj: *mut BnTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of samples and state dimension.
///
/// # Safety
/// `traj` must be a live handle; `samples` and `dim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bn_trajectory_shape(
    traj: *const BnTrajectory,
    samples: *mut usize,
    dim: *mut usize,
) -> BnStatus {
    guard(|| {
        let t = deref(traj, "trajectory")?;
        if samples.is_null() || dim.is_null() {
            return Err(null("shape output"));
        }
        *samples = t.0.len();
        *dim = t.0.states.first().map_or(0, Vec::len);
        Ok(())
    })
}

/// Copy sample times (`samples` doubles) and row-major states
/// (`samples * dim` doubles). Either buffer may be null to skip it.
///
/// # Safety
/// Non-null buffers must hold at least `times_len` / `states_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bn_trajectory_copy(
    traj: *const BnTrajectory,
    times: *mut f64,
    times_len: usize,
    states: *mut f64,
    states_len: usize,
) -> BnStatus {
    guard(|| {
        let t = deref(traj, "trajectory")?;
        if !times.is_null() {
            check_len(times_len, t.0.times.len(), "times buffer")?;
            slice_mut(times, t.0.times.len(), "times")?.copy_from_slice(&t.0.times);
        }
        if !states.is_null() {
            let dim = t.0.states.first().map_or(0, Vec::len);
            let total = dim * t.0.len();
            check_len(states_len, total, "states buffer")?;
            let buf = slice_mut(states, total, "states")?;
            for (row, s) in buf.chunks_mut(dim.max(1)).zip(&t.0.states) {
                row.copy_from_slice(s);
            }
        }
        Ok(())
    })
}

/// All-to-all gains `k^λ` (every equilibrium synchronized above it) and `k^s`
/// (no mixed ON/OFF saturated equilibrium above it).
///
/// # Safety
/// `net` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn bn_thresholds(net: *const BnNetwork, k_lambda_out: *mut f64, k_s_out: *mut f64) -> BnStatus {
    guard(|| {
        let net = deref(net, "network")?;
        if k_lambda_out.is_null() || k_s_out.is_null() {
            return Err(null("threshold output"));
        }
        if net.0.graph().all_to_all_gain().is_none() {
            return Err(Error::NotAllToAll.into());
        }
        let n = net.0.n();
        let ks = k_s(net.0.params(), n)?;
        *k_lambda_out = k_lambda(net.0.params(), n).value;
        *k_s_out = ks.value;
        Ok(())
    })
}
