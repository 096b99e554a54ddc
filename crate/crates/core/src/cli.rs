//! Command implementations behind the `bistable-net` binary.
//!
//! Every command reads a validated [`RunConfig`], writes its outputs into a
//! directory and returns the paths it wrote.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::hillsolve::{find_equilibria_smooth_with, matched_pwa, SmoothEquilibrium, SmoothOptions};
use crate::model::{invariant_box, CoupledNetwork};
use crate::network::TopologyKind;
use crate::pwa::{count_vs_k, enumerate_equilibria_with, write_counts_csv, Enumeration, Stability};
use crate::regulatory::RegulatoryFunction;
use crate::simulate::{
    box_violation, ccw_functional, detect_convergence, integrate_batch, random_initial_conditions, Convergence,
    DensityFunction,
};
use crate::thresholds::{delta_sweep, threshold_report, write_delta_csv, ThresholdReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regulation {
    Pwa,
    Hill,
}

impl Regulation {
    /// `Pwa` when the model is in the piecewise-affine subclass.
    pub fn detect(cfg: &RunConfig) -> Self {
        if cfg.model.pwa_subclass().is_some() {
            Regulation::Pwa
        } else {
            Regulation::Hill
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let file = File::create(&path)?;
    Ok((path, BufWriter::new(file)))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let (path, mut w) = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub converged: bool,
    pub limit: Option<Vec<f64>>,
    /// Index into the equilibrium list of the `equilibria` command.
    pub matched_equilibrium_id: Option<usize>,
    pub box_violation: f64,
    pub ccw_min: f64,
}

/// Equilibrium states used to identify simulated limits, when computable.
fn reference_equilibria(cfg: &RunConfig, net: &CoupledNetwork) -> Option<Vec<Vec<f64>>> {
    match Regulation::detect(cfg) {
        Regulation::Pwa => enumerate_equilibria_with(net, &cfg.tolerances.enumerate_options())
            .ok()
            .map(|e| e.equilibria.into_iter().map(|r| r.state).collect()),
        Regulation::Hill => find_equilibria_smooth_with(net, &smooth_options(cfg))
            .ok()
            .map(|v| v.into_iter().map(|r| r.state).collect()),
    }
}

fn smooth_options(cfg: &RunConfig) -> SmoothOptions {
    SmoothOptions {
        tol: cfg.tolerances.newton,
        ..SmoothOptions::default()
    }
}

/// Writes `trajectory.csv` and `report.json` for a single initial state, or
/// `trajectory_<i>.csv` and a report array for sampled states.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let net = cfg.network();
    let sim = &cfg.simulation;
    let b = invariant_box(&cfg.model)?;
    let x0s = match &sim.x0 {
        Some(x0) => vec![x0.clone()],
        None => random_initial_conditions(&b, net.n(), sim.samples, sim.seed),
    };
    let trajectories = integrate_batch(&net, &x0s, sim.t_end, sim.dt, sim.method)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let reference = reference_equilibria(cfg, &net);
    let rho = DensityFunction::uniform(net.n());
    let single = sim.x0.is_some();
    let mut written = Vec::new();
    let mut reports = Vec::new();
    for (i, traj) in trajectories.iter().enumerate() {
        let name = if single {
            "trajectory.csv".to_string()
        } else {
            format!("trajectory_{i:03}.csv")
        };
        let (path, w) = create(out, &name)?;
        traj.write_csv(w)?;
        written.push(path);
        let conv = detect_convergence(traj, &net, cfg.tolerances.convergence);
        let limit = conv.state().map(<[f64]>::to_vec);
        let matched = match (&conv, &reference) {
            (Convergence::Converged { state }, Some(eqs)) => eqs.iter().position(|e| {
                e.iter()
                    .zip(state)
                    .all(|(a, b)| (a - b).abs() <= cfg.tolerances.match_distance)
            }),
            _ => None,
        };
        let ccw = ccw_functional(traj, &net, &rho)?;
        reports.push(SimulationReport {
            converged: conv.is_converged(),
            limit,
            matched_equilibrium_id: matched,
            box_violation: box_violation(traj, &b),
            ccw_min: ccw.iter().copied().fold(f64::INFINITY, f64::min),
        });
    }
    written.push(if single {
        write_json(out, "report.json", &reports[0])?
    } else {
        write_json(out, "report.json", &reports)?
    });
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regulation", rename_all = "lowercase")]
pub enum EquilibriaOutput {
    Pwa(Enumeration),
    Hill { equilibria: Vec<SmoothEquilibrium> },
}

impl EquilibriaOutput {
    pub fn len(&self) -> usize {
        match self {
            EquilibriaOutput::Pwa(e) => e.equilibria.len(),
            EquilibriaOutput::Hill { equilibria } => equilibria.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn equilibria(cfg: &RunConfig, regulation: Regulation) -> Result<EquilibriaOutput> {
    let net = cfg.network();
    match regulation {
        Regulation::Pwa => Ok(EquilibriaOutput::Pwa(enumerate_equilibria_with(
            &net,
            &cfg.tolerances.enumerate_options(),
        )?)),
        Regulation::Hill => Ok(EquilibriaOutput::Hill {
            equilibria: find_equilibria_smooth_with(&net, &smooth_options(cfg))?,
        }),
    }
}

/// Writes `equilibria.json` and returns the result for display.
pub fn cmd_equilibria(cfg: &RunConfig, regulation: Regulation, out: &Path) -> Result<(EquilibriaOutput, Vec<PathBuf>)> {
    let result = equilibria(cfg, regulation)?;
    let path = write_json(out, "equilibria.json", &result)?;
    Ok((result, vec![path]))
}

/// Writes `counts.csv`, plus `thresholds.json` for all-to-all topologies and
/// `deltas.csv` when band widths are configured.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let net = cfg.network();
    let rows = count_vs_k(&net, &cfg.sweep.grid(), &cfg.tolerances.enumerate_options())?;
    let (path, w) = create(out, "counts.csv")?;
    write_counts_csv(&rows, w)?;
    let mut written = vec![path];
    if cfg.topology.kind() == TopologyKind::AllToAll && net.n() >= 2 {
        written.push(write_json(
            out,
            "thresholds.json",
            &threshold_report(&cfg.model, net.n())?,
        )?);
    } else {
        log::info!(
            "no closed-form thresholds for {} topology; sidecar skipped",
            cfg.topology.kind()
        );
    }
    if let Some(deltas) = &cfg.sweep.deltas {
        let rows = delta_sweep(&cfg.model, net.n(), deltas)?;
        let (path, w) = create(out, "deltas.csv")?;
        write_delta_csv(&rows, w)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes `thresholds.json` and returns the report for display.
pub fn cmd_thresholds(cfg: &RunConfig, out: &Path) -> Result<(ThresholdReport, Vec<PathBuf>)> {
    let report = threshold_report(&cfg.model, cfg.topology.n())?;
    let mut written = vec![write_json(out, "thresholds.json", &report)?];
    if let Some(deltas) = &cfg.sweep.deltas {
        let rows = delta_sweep(&cfg.model, cfg.topology.n(), deltas)?;
        let (path, w) = create(out, "deltas.csv")?;
        write_delta_csv(&rows, w)?;
        written.push(path);
    }
    Ok((report, written))
}

const SCAN_INTERVALS: usize = 100_000;

/// Equilibria `(x₁, x₂)` of one compartment from sign changes of
/// `h(x₁) = x₁ - (V₁/γ₁)g₂((V₂/γ₂)g₁(x₁))` on `[0, x̄₁]`, refined by bisection.
pub fn single_compartment_equilibria(cfg: &RunConfig) -> Result<Vec<[f64; 2]>> {
    let p = &cfg.model;
    let b = invariant_box(p)?;
    let x2_of = |x1: f64| p.v2 / p.gamma2 * p.g1.eval_unchecked(x1);
    let h = |x1: f64| x1 - p.v1 / p.gamma1 * p.g2.eval_unchecked(x2_of(x1));
    let step = b.x1_max / SCAN_INTERVALS as f64;
    let mut roots = Vec::new();
    let mut prev = h(0.0);
    let mut prev_a = 0.0;
    for i in 0..=SCAN_INTERVALS {
        let a = i as f64 * step;
        let ha = if i == 0 { prev } else { h(a) };
        if ha == 0.0 {
            roots.push(a);
        } else if i > 0 && prev != 0.0 && prev.signum() != ha.signum() {
            let (mut lo, mut hi) = (prev_a, a);
            let h_lo = prev;
            let mut root = None;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let hm = h(mid);
                if hm == 0.0 {
                    root = Some(mid);
                    break;
                }
                if (hm > 0.0) == (h_lo > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 {
                    break;
                }
            }
            roots.push(root.unwrap_or(0.5 * (lo + hi)));
        }
        prev = ha;
        prev_a = a;
    }
    Ok(roots.into_iter().map(|x1| [x1, x2_of(x1)]).collect())
}

/// Writes `phase_portrait.csv` with columns `kind,x1,x2,dx1,dx2`: `grid²`
/// vector-field samples over the invariant box, one `equilibrium` row per
/// equilibrium and a `box` row holding the box bounds.
pub fn cmd_phase_portrait(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    if cfg.topology.n() != 1 {
        return Err(Error::config(
            "topology.n",
            format!("phase portraits need a single compartment, got {}", cfg.topology.n()),
        ));
    }
    let net = cfg.network();
    let b = invariant_box(&cfg.model)?;
    let g = cfg.phase_portrait.grid;
    let (path, file) = create(out, "phase_portrait.csv")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["kind", "x1", "x2", "dx1", "dx2"])?;
    let mut f = [0.0; 2];
    for i in 0..g {
        let x1 = b.x1_max * i as f64 / (g - 1) as f64;
        for j in 0..g {
            let x2 = b.x2_max * j as f64 / (g - 1) as f64;
            net.vector_field_into(&[x1, x2], &mut f);
            w.write_record([
                "field".to_string(),
                x1.to_string(),
                x2.to_string(),
                f[0].to_string(),
                f[1].to_string(),
            ])?;
        }
    }
    for [x1, x2] in single_compartment_equilibria(cfg)? {
        net.vector_field_into(&[x1, x2], &mut f);
        w.write_record([
            "equilibrium".to_string(),
            x1.to_string(),
            x2.to_string(),
            f[0].to_string(),
            f[1].to_string(),
        ])?;
    }
    w.write_record([
        "box".to_string(),
        b.x1_max.to_string(),
        b.x2_max.to_string(),
        "0".into(),
        "0".into(),
    ])?;
    w.flush()?;
    Ok(vec![path])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub k: f64,
    pub pwa_total: usize,
    pub pwa_stable: usize,
    pub hill_total: usize,
    pub hill_stable: usize,
}

/// Equilibrium counts of the Hill model and its matched piecewise-affine
/// surrogate on the sweep grid.
pub fn compare(cfg: &RunConfig) -> Result<Vec<CompareRow>> {
    if !matches!(cfg.model.g1, RegulatoryFunction::Hill { .. }) {
        return Err(Error::config("model.g1", "compare needs a Hill activator for g1"));
    }
    let mut pwa_cfg = cfg.clone();
    pwa_cfg.model.g1 = matched_pwa(&cfg.model.g1)?;
    let opts = smooth_options(cfg);
    let pwa_opts = cfg.tolerances.enumerate_options();
    cfg.sweep
        .grid()
        .into_iter()
        .map(|k| {
            let hill = find_equilibria_smooth_with(&cfg.network_at(k)?, &opts)?;
            let pwa = enumerate_equilibria_with(&pwa_cfg.network_at(k)?, &pwa_opts)?;
            Ok(CompareRow {
                k,
                pwa_total: pwa.equilibria.len(),
                pwa_stable: pwa.stable_count(),
                hill_total: hill.len(),
                hill_stable: hill.iter().filter(|r| r.stability == Stability::Stable).count(),
            })
        })
        .collect()
}

/// Writes `compare.csv` with header `k,pwa_total,pwa_stable,hill_total,hill_stable`.
pub fn cmd_compare(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let rows = compare(cfg)?;
    let (path, file) = create(out, "compare.csv")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["k", "pwa_total", "pwa_stable", "hill_total", "hill_stable"])?;
    for r in &rows {
        w.write_record([
            r.k.to_string(),
            r.pwa_total.to_string(),
            r.pwa_stable.to_string(),
            r.hill_total.to_string(),
            r.hill_stable.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(vec![path])
}
