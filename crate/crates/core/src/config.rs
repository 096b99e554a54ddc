//! Run configuration shared by the command-line tool and the C interface.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hillsolve::DEFAULT_SMOOTH_TOL;
use crate::model::{invariant_box, CoupledNetwork, ModelParams};
use crate::network::{build_topology, DiffusionGraph, TopologyKind};
use crate::pwa::{linear_grid, EnumerateOptions, DEFAULT_CAP, DEFAULT_MARGIN, DEFAULT_TOL};
use crate::regulatory::RegulatoryFunction;
use crate::simulate::Method;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParams,
    pub topology: DiffusionGraph,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub simulation: SimulationSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub phase_portrait: PhasePortraitSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub k_min: f64,
    pub k_max: f64,
    /// Number of grid intervals; the grid has `k_steps + 1` points.
    pub k_steps: usize,
    /// Explicit gains; replaces the regular grid when present.
    pub k_values: Option<Vec<f64>>,
    /// Band widths for the threshold-versus-δ table.
    pub deltas: Option<Vec<f64>>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            k_min: 1e-3,
            k_max: 2.0,
            k_steps: 400,
            k_values: None,
            deltas: None,
        }
    }
}

impl SweepSpec {
    pub fn grid(&self) -> Vec<f64> {
        match &self.k_values {
            Some(v) => v.clone(),
            None => linear_grid(self.k_min, self.k_max, self.k_steps),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSpec {
    pub t_end: f64,
    /// Output stride (adaptive method) or fixed step (RK4).
    pub dt: f64,
    pub method: Method,
    /// Explicit initial state; when absent `samples` states are drawn from
    /// the invariant box with `seed`.
    pub x0: Option<Vec<f64>>,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            t_end: 200.0,
            dt: 0.1,
            method: Method::Rk45,
            x0: None,
            samples: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Domain membership and synchronization tolerance.
    pub membership: f64,
    /// Real-part margin for stability classes.
    pub margin: f64,
    pub convergence: f64,
    /// Residual tolerance of the smooth root finder.
    pub newton: f64,
    /// Distance for matching a simulated limit to an equilibrium.
    pub match_distance: f64,
    /// Largest network size accepted by the enumerator.
    pub enumeration_cap: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            membership: DEFAULT_TOL,
            margin: DEFAULT_MARGIN,
            convergence: 1e-8,
            newton: DEFAULT_SMOOTH_TOL,
            match_distance: 1e-5,
            enumeration_cap: DEFAULT_CAP,
        }
    }
}

impl Tolerances {
    pub fn enumerate_options(&self) -> EnumerateOptions {
        EnumerateOptions {
            tol: self.membership,
            margin: self.margin,
            cap: self.enumeration_cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhasePortraitSpec {
    /// Samples per axis.
    pub grid: usize,
}

impl Default for PhasePortraitSpec {
    fn default() -> Self {
        Self { grid: 50 }
    }
}

impl Default for RunConfig {
    /// Five compartments, all-to-all, `V₁ = V₂ = γ₁ = γ₂ = 1`, `θ = 0.45`,
    /// `δ = 0.1`, `g₂` identity.
    fn default() -> Self {
        let model = ModelParams::new(
            1.0,
            1.0,
            1.0,
            1.0,
            RegulatoryFunction::pwa(0.45, 0.1).expect("valid"),
            RegulatoryFunction::Identity,
        )
        .expect("valid");
        Self {
            model,
            topology: build_topology(TopologyKind::AllToAll, 5, 0.1, None).expect("valid"),
            sweep: SweepSpec::default(),
            simulation: SimulationSpec::default(),
            tolerances: Tolerances::default(),
            phase_portrait: PhasePortraitSpec::default(),
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite and > 0, got {v}")))
    }
}

impl RunConfig {
    /// Parse and validate; errors name the offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.sweep;
        match &s.k_values {
            Some(v) if v.is_empty() => return Err(Error::config("sweep.k_values", "gain list is empty")),
            Some(v) => {
                if let Some(bad) = v.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
                    return Err(Error::config(
                        "sweep.k_values",
                        format!("gain {bad} must be finite and >= 0"),
                    ));
                }
            }
            None => {
                if s.k_steps == 0 {
                    return Err(Error::config("sweep.k_steps", "need at least one grid interval"));
                }
                if !(s.k_min >= 0.0 && s.k_min.is_finite() && s.k_max.is_finite() && s.k_max > s.k_min) {
                    return Err(Error::config(
                        "sweep.k_min",
                        format!("need 0 <= k_min < k_max, got [{}, {}]", s.k_min, s.k_max),
                    ));
                }
            }
        }
        if let Some(d) = &s.deltas {
            if d.is_empty() {
                return Err(Error::config("sweep.deltas", "band width list is empty"));
            }
            if let Some(bad) = d.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::config("sweep.deltas", format!("band width {bad} must be > 0")));
            }
        }
        let sim = &self.simulation;
        positive("simulation.t_end", sim.t_end)?;
        positive("simulation.dt", sim.dt)?;
        if sim.samples == 0 {
            return Err(Error::config("simulation.samples", "need at least one sample"));
        }
        if let Some(x0) = &sim.x0 {
            let dim = 2 * self.topology.n();
            if x0.len() != dim {
                return Err(Error::config(
                    "simulation.x0",
                    format!(
                        "expected {dim} entries ([X1; X2] for {} compartments), got {}",
                        self.topology.n(),
                        x0.len()
                    ),
                ));
            }
            if let Some(bad) = x0.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::config(
                    "simulation.x0",
                    format!("entry {bad} must be finite and >= 0"),
                ));
            }
            if let Ok(b) = invariant_box(&self.model) {
                let excursion = b.excursion(x0);
                if excursion > 1e-12 {
                    return Err(Error::config(
                        "simulation.x0",
                        format!(
                            "initial state leaves the invariant box [0, {}] x [0, {}] per compartment by {excursion}",
                            b.x1_max, b.x2_max
                        ),
                    ));
                }
            }
        }
        let t = &self.tolerances;
        positive("tolerances.membership", t.membership)?;
        if !(t.margin >= 0.0 && t.margin.is_finite()) {
            return Err(Error::config("tolerances.margin", "must be finite and >= 0"));
        }
        positive("tolerances.convergence", t.convergence)?;
        positive("tolerances.newton", t.newton)?;
        positive("tolerances.match_distance", t.match_distance)?;
        if self.phase_portrait.grid < 2 {
            return Err(Error::config("phase_portrait.grid", "need at least 2 samples per axis"));
        }
        Ok(())
    }

    pub fn network(&self) -> CoupledNetwork {
        CoupledNetwork::new(self.model.clone(), self.topology.clone())
    }

    /// Network with the topology rescaled to gain `k`.
    pub fn network_at(&self, k: f64) -> Result<CoupledNetwork> {
        Ok(CoupledNetwork::new(self.model.clone(), self.topology.with_gain(k)?))
    }

    /// Replace the topology kind, keeping size and gain.
    pub fn set_topology_kind(&mut self, kind: TopologyKind) -> Result<()> {
        if kind == TopologyKind::Custom {
            return Err(Error::config(
                "topology.kind",
                "custom weights can only be given in a config file",
            ));
        }
        let k = self.topology.gain().unwrap_or_else(|| self.topology.weights().max());
        self.topology = build_topology(kind, self.topology.n(), k, None)?;
        Ok(())
    }

    pub fn set_gain(&mut self, k: f64) -> Result<()> {
        self.topology = self.topology.with_gain(k)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG3: &str = r#"{
        "model": {"gamma1": 1, "gamma2": 1, "v1": 1, "v2": 1,
                  "g1": {"kind": "pwa", "theta": 0.45, "delta": 0.1},
                  "g2": {"kind": "identity"}},
        "topology": {"kind": "all_to_all", "n": 5, "k": 0.5},
        "sweep": {"k_min": 0.001, "k_max": 2.0, "k_steps": 400}
    }"#;

    #[test]
    fn parses_and_defaults() {
        let cfg = RunConfig::from_json(FIG3).unwrap();
        assert_eq!(cfg.topology.n(), 5);
        assert_eq!(cfg.topology.gain(), Some(0.5));
        assert_eq!(cfg.sweep.grid().len(), 401);
        assert_eq!(cfg.simulation.method, Method::Rk45);
        assert_eq!(cfg.tolerances.membership, 1e-9);
        let model_only = RunConfig::default();
        assert_eq!(model_only.model, cfg.model);
    }

    #[test]
    fn unknown_key_names_path() {
        let text = FIG3.replace("\"k_steps\"", "\"k_stepz\"");
        let err = RunConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("sweep"), "{err}");
        assert!(err.contains("k_stepz"), "{err}");
    }

    #[test]
    fn validation_errors_name_field() {
        let text = FIG3.replace("\"k_steps\": 400", "\"k_values\": []");
        let err = RunConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("sweep.k_values"), "{err}");

        let text = FIG3.replace(
            "\"sweep\": {\"k_min\": 0.001, \"k_max\": 2.0, \"k_steps\": 400}",
            "\"simulation\": {\"x0\": [2, 0, 0, 0, 0, 0, 0, 0, 0, 0]}",
        );
        let err = RunConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("simulation.x0") && err.contains("invariant box"), "{err}");

        let err = RunConfig::from_json("{ not json").unwrap_err().to_string();
        assert!(err.contains("configuration error"), "{err}");
    }

    #[test]
    fn overrides() {
        let mut cfg = RunConfig::from_json(FIG3).unwrap();
        cfg.set_topology_kind(TopologyKind::Star).unwrap();
        assert_eq!(cfg.topology.kind(), TopologyKind::Star);
        assert_eq!(cfg.topology.gain(), Some(0.5));
        cfg.set_gain(2.0).unwrap();
        assert_eq!(cfg.topology.gain(), Some(2.0));
        assert!(cfg.set_topology_kind(TopologyKind::Custom).is_err());
    }

    #[test]
    fn round_trip() {
        let cfg = RunConfig::from_json(FIG3).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
    }
}
