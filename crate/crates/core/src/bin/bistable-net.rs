use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bistable_net::cli::{self, Regulation};
use bistable_net::config::RunConfig;
use bistable_net::network::TopologyKind;
use bistable_net::Error;

#[derive(Parser)]
#[command(
    name = "bistable-net",
    version,
    about = "Equilibria, thresholds and trajectories of coupled bistable networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate trajectories and report convergence
    Simulate(Common),
    /// List every equilibrium at one coupling gain
    Equilibria(Common),
    /// Count equilibria over a grid of coupling gains
    Sweep(Common),
    /// Closed-form coupling thresholds
    Thresholds(Common),
    /// Vector-field samples of a single compartment
    PhasePortrait(Common),
    /// Hill model against its matched piecewise-affine surrogate
    Compare(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum RegulationArg {
    Pwa,
    Hill,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; built-in defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Coupling gain
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    k_min: Option<f64>,
    #[arg(long)]
    k_max: Option<f64>,
    /// Grid intervals between k-min and k-max
    #[arg(long)]
    k_steps: Option<usize>,
    /// all_to_all, star, loop or line
    #[arg(long)]
    topology: Option<TopologyKind>,
    #[arg(long, value_enum)]
    regulation: Option<RegulationArg>,
    /// Domain membership tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for sampled initial states
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads
    #[arg(long)]
    jobs: Option<usize>,
    /// Samples per axis for phase portraits
    #[arg(long)]
    grid: Option<usize>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl Common {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_path(path)?,
            None => RunConfig::default(),
        };
        if let Some(kind) = self.topology {
            cfg.set_topology_kind(kind)?;
        }
        if let Some(k) = self.k {
            cfg.set_gain(k)?;
        }
        if self.k_min.is_some() || self.k_max.is_some() || self.k_steps.is_some() {
            cfg.sweep.k_values = None;
        }
        if let Some(v) = self.k_min {
            cfg.sweep.k_min = v;
        }
        if let Some(v) = self.k_max {
            cfg.sweep.k_max = v;
        }
        if let Some(v) = self.k_steps {
            cfg.sweep.k_steps = v;
        }
        if let Some(v) = self.tol {
            cfg.tolerances.membership = v;
        }
        if let Some(v) = self.seed {
            cfg.simulation.seed = v;
        }
        if let Some(v) = self.grid {
            cfg.phase_portrait.grid = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn regulation(&self, cfg: &RunConfig) -> Regulation {
        match self.regulation {
            Some(RegulationArg::Pwa) => Regulation::Pwa,
            Some(RegulationArg::Hill) => Regulation::Hill,
            None => Regulation::detect(cfg),
        }
    }
}

fn run(command: Command) -> Result<Vec<PathBuf>, Error> {
    let common = match &command {
        Command::Simulate(c)
        | Command::Equilibria(c)
        | Command::Sweep(c)
        | Command::Thresholds(c)
        | Command::PhasePortrait(c)
        | Command::Compare(c) => c,
    };
    if let Some(jobs) = common.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            log::warn!("could not size worker pool: {e}");
        }
    }
    let cfg = common.load()?;
    let out = &common.out;
    match &command {
        Command::Simulate(_) => cli::cmd_simulate(&cfg, out),
        Command::Equilibria(c) => {
            let (result, written) = cli::cmd_equilibria(&cfg, c.regulation(&cfg), out)?;
            println!("{} equilibria", result.len());
            Ok(written)
        }
        Command::Sweep(_) => cli::cmd_sweep(&cfg, out),
        Command::Thresholds(_) => {
            let (report, written) = cli::cmd_thresholds(&cfg, out)?;
            println!("{report}");
            Ok(written)
        }
        Command::PhasePortrait(_) => cli::cmd_phase_portrait(&cfg, out),
        Command::Compare(_) => cli::cmd_compare(&cfg, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BISTABLE_NET_LOG", "warn")).init();
    let args = Cli::parse();
    match run(args.command) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::NotPwaSubclass) {
                eprintln!(
                    "hint: enumeration needs g1 = {{\"kind\": \"pwa\", ...}} and g2 = {{\"kind\": \"identity\"}}; \
                     use --regulation hill for a Hill activator"
                );
            }
            ExitCode::FAILURE
        }
    }
}
