//! Analysis toolkit for networks of diffusively coupled bistable compartments.
//!
//! Each compartment carries two species regulating each other,
//!
//! ```text
//! ẋ₁ = -γ₁x₁ + V₁g₂(x₂) + Σⱼ aᵢⱼ(x₁ⱼ - x₁ᵢ)
//! ẋ₂ = -γ₂x₂ + V₂g₁(x₁)
//! ```
//!
//! and only the first species diffuses over an undirected graph. The crate
//! provides trajectory simulation, exact equilibrium enumeration for the
//! piecewise-affine subclass (`g₁` piecewise-affine, `g₂` identity), Newton
//! multistart for the smooth Hill variant, and the closed-form coupling
//! thresholds above which equilibria synchronize.

pub mod cli;
pub mod config;
pub mod error;
pub mod exact;
pub mod hillsolve;
pub mod model;
pub mod network;
pub mod pwa;
pub mod regulatory;
pub mod simulate;
pub mod thresholds;

pub use error::{Error, Result};
