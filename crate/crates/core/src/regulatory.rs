//! Regulatory functions: piecewise-affine and Hill activators, their repressor
//! complements and the identity map.
//!
//! The piecewise-affine activator is
//!
//! ```text
//! g(x) = 0                 x < θ
//!        (x - θ) / δ       θ <= x <= θ + δ
//!        1                 x > θ + δ
//! ```
//!
//! and the Hill activator is `g_s(x) = (x/θ)^n / (1 + (x/θ)^n)`. A repressor
//! wraps an activator as `1 - f(x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monotone regulation of one species by another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", try_from = "RawRegulatory")]
pub enum RegulatoryFunction {
    #[serde(rename = "pwa")]
    PwaActivator {
        theta: f64,
        delta: f64,
    },
    Hill {
        theta: f64,
        n: f64,
    },
    Repressor {
        inner: Box<RegulatoryFunction>,
    },
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Increasing,
    Decreasing,
}

impl Orientation {
    fn flip(self) -> Self {
        match self {
            Orientation::Increasing => Orientation::Decreasing,
            Orientation::Decreasing => Orientation::Increasing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Finite(f64),
    Unbounded,
}

impl Bound {
    pub fn value(self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(v),
            Bound::Unbounded => None,
        }
    }
}

// Unvalidated wire form; conversion enforces the parameter invariants.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawRegulatory {
    Pwa { theta: f64, delta: f64 },
    Hill { theta: f64, n: f64 },
    Repressor { inner: Box<RegulatoryFunction> },
    Identity,
}

impl TryFrom<RawRegulatory> for RegulatoryFunction {
    type Error = Error;

    fn try_from(raw: RawRegulatory) -> Result<Self> {
        match raw {
            RawRegulatory::Pwa { theta, delta } => Self::pwa(theta, delta),
            RawRegulatory::Hill { theta, n } => Self::hill(theta, n),
            RawRegulatory::Repressor { inner } => Self::repressor(*inner),
            RawRegulatory::Identity => Ok(Self::Identity),
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

impl RegulatoryFunction {
    pub fn pwa(theta: f64, delta: f64) -> Result<Self> {
        positive("theta", theta)?;
        positive("delta", delta)?;
        Ok(Self::PwaActivator { theta, delta })
    }

    pub fn hill(theta: f64, n: f64) -> Result<Self> {
        positive("theta", theta)?;
        if !(n.is_finite() && n >= 1.0) {
            return Err(Error::InvalidParameter {
                name: "n",
                value: n,
                reason: "cooperativity must be >= 1",
            });
        }
        Ok(Self::Hill { theta, n })
    }

    /// `1 - inner(x)`; the inner function must map into [0, 1].
    pub fn repressor(inner: RegulatoryFunction) -> Result<Self> {
        if inner.upper_bound() != Bound::Finite(1.0) {
            return Err(Error::InvalidParameter {
                name: "inner",
                value: f64::NAN,
                reason: "repressor requires an inner function with range in [0, 1]",
            });
        }
        Ok(Self::Repressor { inner: Box::new(inner) })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::NegativeInput(x));
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluation without the sign check. Negative arguments are mapped to
    /// `f(0)`, the continuous extension used inside integrator stages.
    pub fn eval_unchecked(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match self {
            Self::PwaActivator { theta, delta } => {
                if x < *theta {
                    0.0
                } else if x > theta + delta {
                    1.0
                } else {
                    (x - theta) / delta
                }
            }
            Self::Hill { theta, n } => {
                let r = (x / theta).powf(*n);
                if r.is_infinite() {
                    1.0
                } else {
                    r / (1.0 + r)
                }
            }
            Self::Repressor { inner } => 1.0 - inner.eval_unchecked(x),
            Self::Identity => x,
        }
    }

    /// Derivative in `x`. On the breakpoints of the piecewise-affine kind the
    /// right derivative is returned.
    pub fn derivative(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match self {
            Self::PwaActivator { theta, delta } => {
                if x >= *theta && x < theta + delta {
                    1.0 / delta
                } else {
                    0.0
                }
            }
            Self::Hill { theta, n } => {
                let r = (x / theta).powf(*n);
                if !r.is_finite() {
                    return 0.0;
                }
                // d/dx r/(1+r) = r' / (1+r)^2 with r' = n x^(n-1) / θ^n
                let dr = n * (x / theta).powf(n - 1.0) / theta;
                dr / ((1.0 + r) * (1.0 + r))
            }
            Self::Repressor { inner } => -inner.derivative(x),
            Self::Identity => 1.0,
        }
    }

    pub fn orientation(&self) -> Orientation {
        match self {
            Self::Repressor { inner } => inner.orientation().flip(),
            _ => Orientation::Increasing,
        }
    }

    pub fn lipschitz_constant(&self) -> f64 {
        match self {
            Self::PwaActivator { delta, .. } => 1.0 / delta,
            Self::Identity => 1.0,
            Self::Repressor { inner } => inner.lipschitz_constant(),
            Self::Hill { theta, n } => hill_max_slope(*theta, *n),
        }
    }

    pub fn upper_bound(&self) -> Bound {
        match self {
            Self::Identity => Bound::Unbounded,
            _ => Bound::Finite(1.0),
        }
    }

    /// `inf { x in [a, b] : f(x) > y }` for a non-decreasing `f`.
    ///
    /// Accepts `y` in `[f(a), f(b))`. The lower end is included so that the
    /// plateau value `y = f(a)` resolves to the right end of the plateau.
    pub fn generalized_inverse(&self, a: f64, b: f64, y: f64) -> Result<f64> {
        if self.orientation() != Orientation::Increasing || matches!(self, Self::Repressor { .. }) {
            return Err(Error::NotIncreasing);
        }
        if !(a >= 0.0 && b > a) {
            return Err(Error::InvalidParameter {
                name: "interval",
                value: b - a,
                reason: "requires 0 <= a < b",
            });
        }
        let lo = self.eval(a)?;
        let hi = self.eval(b)?;
        if !(y >= lo && y < hi) {
            return Err(Error::OutOfRange { y, lo, hi });
        }
        let x = match self {
            Self::PwaActivator { theta, delta } => theta + delta * y,
            Self::Hill { theta, n } => theta * (y / (1.0 - y)).powf(1.0 / n),
            Self::Identity => y,
            Self::Repressor { .. } => unreachable!(),
        };
        Ok(x.clamp(a, b))
    }
}

/// Maximum of the Hill activator's slope.
///
/// For `n > 1` the slope peaks where `(x/θ)^n = (n-1)/(n+1)`; for `n = 1` the
/// slope is decreasing and its supremum `1/θ` sits at `x = 0`.
pub fn hill_max_slope(theta: f64, n: f64) -> f64 {
    if n <= 1.0 {
        return 1.0 / theta;
    }
    let r = (n - 1.0) / (n + 1.0);
    n * r.powf((n - 1.0) / n) / (theta * (1.0 + r) * (1.0 + r))
}
