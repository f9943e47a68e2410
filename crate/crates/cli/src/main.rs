mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{DensitySpec, ExperimentConfig};
use crate::error::CliError;
use sprp_core::limits::RhoSpec;

/// Spatial random permutations on the torus: exact tables, samplers and limit laws.
#[derive(Debug, Parser)]
#[command(name = "sprp", version)]
struct Cli {
    #[command(flatten)]
    model: ModelArgs,
    #[command(subcommand)]
    command: Command,
}

/// Model and output settings; each flag overrides the matching config field.
#[derive(Debug, Args)]
struct ModelArgs {
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dimension of the torus.
    #[arg(long, global = true)]
    d: Option<usize>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Number of points N.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Fixed density ρ = N / L^d.
    #[arg(long, global = true, conflicts_with_all = ["rho_power", "rho_log", "side"])]
    rho: Option<f64>,
    /// Density c·N^a, given as `c,a`.
    #[arg(long, global = true, value_parser = parse_pair, conflicts_with_all = ["rho_log", "side"])]
    rho_power: Option<(f64, f64)>,
    /// Density c·ln N.
    #[arg(long, global = true, conflicts_with = "side")]
    rho_log: Option<f64>,
    /// Side length L of the torus.
    #[arg(long, global = true)]
    side: Option<f64>,
    /// Isotropic Gaussian jumps with this variance per coordinate.
    #[arg(long, global = true, conflicts_with = "density_csv")]
    variance: Option<f64>,
    /// One-dimensional jump density tabulated as `x,value` rows.
    #[arg(long, global = true)]
    density_csv: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of independent replicas M.
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Data output (CSV or JSONL); standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON report output.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Histogram CSV output.
    #[arg(long, global = true)]
    hist: Option<PathBuf>,
    /// Histogram bin count.
    #[arg(long, global = true)]
    bins: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cycle weights W_j for j = 1..N as CSV.
    Weights,
    /// log H_n for n = 0..N as CSV.
    Partition,
    /// Exact law of the first cycle length as CSV.
    Pmf {
        /// Cut-off ε for the fraction of points in cycles longer than εN.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Cycle lengths of M sampled permutations as JSONL.
    Sample,
    /// Point positions of sampled permutations as CSV.
    Positions,
    /// Runs of the modified stick-breaking process as JSONL.
    Stickbreak {
        /// Unbreakable mass τ in [0, 1).
        #[arg(long)]
        tau: Option<f64>,
        /// Number of pieces K per run.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Regime classification and the constants of the model, as JSON.
    Regime,
    /// A limit law's density and cdf on a grid, as CSV.
    Limitcheck {
        #[arg(long, value_enum)]
        law: LawKind,
        /// Number of grid points.
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Slope α for the critical and log-scale laws.
        #[arg(long)]
        alpha: Option<f64>,
        /// Unbreakable mass τ for the first stick-breaking piece.
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Generating function E t^C of the cycle count, as CSV.
    Pgf {
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
    },
    /// Runs the acceptance suite.
    Accept {
        /// Criterion ids to run, comma separated; all when omitted.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LawKind {
    GammaHalf,
    UniformLog,
    Theta,
    Y,
    X1,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected two comma-separated numbers")?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((parse(a)?, parse(b)?))
}

impl ModelArgs {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let m = &mut cfg.model;
        m.d = self.d.or(m.d);
        m.theta = self.theta.or(m.theta);
        m.n = self.n.or(m.n);
        let rho = match (self.rho, self.rho_power, self.rho_log) {
            (Some(rho), _, _) => Some(RhoSpec::Fixed { rho }),
            (_, Some((c, a)), _) => Some(RhoSpec::Power { c, a }),
            (_, _, Some(c)) => Some(RhoSpec::Log { c }),
            _ => None,
        };
        if rho.is_some() {
            m.rho = rho;
            m.side = None;
        }
        if self.side.is_some() {
            m.side = self.side;
            m.rho = None;
        }
        if let Some(variance) = self.variance {
            m.density = Some(DensitySpec::Isotropic { variance });
        }
        if let Some(path) = &self.density_csv {
            m.density = Some(DensitySpec::Tabulated { path: path.clone() });
        }
        let r = &mut cfg.run;
        r.seed = self.seed.or(r.seed);
        r.replicas = self.replicas.or(r.replicas);
        r.bins = self.bins.or(r.bins);
        let o = &mut cfg.output;
        o.data = self.out.clone().or(o.data.take());
        o.report = self.report.clone().or(o.report.take());
        o.histogram = self.hist.clone().or(o.histogram.take());
        cfg.replicas()?;
        Ok(cfg)
    }
}

/// Sizes the global worker pool from `SPRP_THREADS`.
fn init_pool() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SPRP_THREADS") else {
        return Ok(());
    };
    let threads: usize = match raw.trim().parse() {
        Ok(t) if t > 0 => t,
        _ => return Err(CliError::Config(format!("SPRP_THREADS must be a positive integer, got {raw:?}"))),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))
}

fn run(cli: Cli) -> Result<bool, CliError> {
    init_pool()?;
    let mut cfg = cli.model.resolve()?;
    match cli.command {
        Command::Weights => commands::weights(&cfg),
        Command::Partition => commands::partition(&cfg),
        Command::Pmf { epsilon } => {
            cfg.run.epsilon = epsilon.or(cfg.run.epsilon);
            commands::pmf(&cfg)
        }
        Command::Sample => commands::sample(&cfg),
        Command::Positions => commands::positions(&cfg),
        Command::Stickbreak { tau, steps } => {
            cfg.run.tau = tau.or(cfg.run.tau);
            cfg.run.steps = steps.or(cfg.run.steps);
            commands::stickbreak(&cfg)
        }
        Command::Regime => commands::regime(&cfg),
        Command::Limitcheck { law, points, alpha, tau } => {
            cfg.run.tau = tau.or(cfg.run.tau);
            commands::limitcheck(&cfg, law, points, alpha)
        }
        Command::Pgf { t } => {
            cfg.run.t = Some(t);
            commands::pgf(&cfg)
        }
        Command::Accept { only } => commands::accept(&cfg, &only),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
