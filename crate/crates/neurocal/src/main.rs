use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use log::error;
use neurocal::commands;
use neurocal::config::{CalibrationTarget, RunConfig, SensitivityTarget};
use neurocal::error::{exit_code, Invalid, EXIT_OK};
use neurocal::exec::{default_workers, RayonExecutor};
use neurocal_core::distances::DistanceKind;
use neurocal_core::growth::Model;
use neurocal_core::morphometrics::Morphometric;
use neurocal_core::sensitivity::SeedScheme;

/// Calibration of stochastic agent-based neuron growth models.
///
/// Log verbosity follows RUST_LOG (default: info).
#[derive(Parser)]
#[command(name = "neurocal", version)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow neurons; write SWC files, a QoI table and summary statistics.
    Simulate(SimulateArgs),
    /// Validate SWC files and extract their QoI table.
    Morphometrics(MorphometricsArgs),
    /// Run SMC-ABC against an observed QoI table.
    Calibrate(CalibrateArgs),
    /// Sobol indices of the growth model or the Ishigami function.
    Sensitivity(SensitivityArgs),
    /// Pair each data neuron with its nearest simulated neuron.
    Pair(PairArgs),
    /// Accuracy of the empirical Wasserstein distance on Gaussian samples.
    WassersteinStudy(StudyArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Growth model preset.
    #[arg(long, value_parser = parse_model)]
    model: Option<Model>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Number of neurons.
    #[arg(long)]
    count: Option<usize>,
    /// Comma-separated QoIs, e.g. M1,M2.
    #[arg(long, value_delimiter = ',')]
    select: Option<Vec<Morphometric>>,
    /// Skip writing SWC files.
    #[arg(long)]
    no_swc: bool,
}

#[derive(Args)]
struct MorphometricsArgs {
    /// SWC files or directories.
    inputs: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    select: Option<Vec<Morphometric>>,
    /// Keep only these SWC type codes, e.g. 4 for apical dendrites.
    #[arg(long, value_delimiter = ',')]
    subtree: Option<Vec<i32>>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Observed QoI CSV.
    #[arg(long)]
    observed: Option<PathBuf>,
    /// growth or toy-gaussian.
    #[arg(long, value_parser = parse_target)]
    target: Option<CalibrationTarget>,
    #[arg(long)]
    particles: Option<usize>,
    /// Simulated rows per parameter evaluation.
    #[arg(long)]
    sims_per_param: Option<usize>,
    /// Total simulated rows.
    #[arg(long)]
    budget: Option<u64>,
    /// wasserstein, sliced-wasserstein, kl or gamma.
    #[arg(long, value_parser = parse_distance)]
    distance: Option<DistanceKind>,
    #[arg(long)]
    epsilon_target: Option<f64>,
    /// Wall-clock limit in seconds; the run stops resumably.
    #[arg(long)]
    max_seconds: Option<f64>,
    /// Continue from the checkpoint in the output directory.
    #[arg(long)]
    resume: bool,
    /// Skip the posterior predictive check.
    #[arg(long)]
    no_predictive: bool,
}

#[derive(Args)]
struct SensitivityArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// growth or ishigami.
    #[arg(long, value_parser = parse_sa_target)]
    target: Option<SensitivityTarget>,
    /// Base sample count (rounded up to a power of two).
    #[arg(long)]
    n_base: Option<usize>,
    /// Simulations averaged per design row.
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    select: Option<Vec<Morphometric>>,
    /// per-base-index or per-row.
    #[arg(long, value_parser = parse_scheme)]
    seed_scheme: Option<SeedScheme>,
}

#[derive(Args)]
struct PairArgs {
    /// Data QoI CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Simulated QoI CSV.
    #[arg(long)]
    sim: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    repetitions: Option<usize>,
}

fn kebab<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_model(s: &str) -> Result<Model, String> {
    kebab(s)
}

fn parse_target(s: &str) -> Result<CalibrationTarget, String> {
    kebab(s)
}

fn parse_sa_target(s: &str) -> Result<SensitivityTarget, String> {
    kebab(s)
}

fn parse_distance(s: &str) -> Result<DistanceKind, String> {
    kebab(s)
}

fn parse_scheme(s: &str) -> Result<SeedScheme, String> {
    kebab(s)
}

fn apply_model(cfg: &mut RunConfig, m: &ModelArgs) {
    if let Some(model) = m.model {
        cfg.model.preset = model;
    }
}

/// Loads the config file, applies the flags and validates the result.
fn resolve(cli: &Cli) -> Result<RunConfig, Invalid> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = Some(w);
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    match &cli.command {
        Command::Simulate(a) => {
            apply_model(&mut cfg, &a.model);
            let s = &mut cfg.simulate;
            if let Some(c) = a.count {
                s.count = c;
            }
            if let Some(sel) = &a.select {
                s.selection = sel.clone();
            }
            if a.no_swc {
                s.write_swc = false;
            }
        }
        Command::Morphometrics(a) => {
            let m = &mut cfg.morphometrics;
            if !a.inputs.is_empty() {
                m.inputs = a.inputs.clone();
            }
            if let Some(sel) = &a.select {
                m.selection = sel.clone();
            }
            if a.subtree.is_some() {
                m.subtree = a.subtree.clone();
            }
        }
        Command::Calibrate(a) => {
            apply_model(&mut cfg, &a.model);
            let c = &mut cfg.calibrate;
            if a.observed.is_some() {
                c.observed = a.observed.clone();
            }
            if let Some(t) = a.target {
                c.target = t;
            }
            if let Some(n) = a.particles {
                c.smc.n_particles = n;
            }
            if let Some(n) = a.sims_per_param {
                c.smc.sims_per_param = n;
            }
            if let Some(b) = a.budget {
                c.smc.budget = b;
            }
            if let Some(d) = a.distance {
                c.smc.distance.kind = d;
            }
            if a.epsilon_target.is_some() {
                c.smc.epsilon_target = a.epsilon_target;
            }
            if a.max_seconds.is_some() {
                c.smc.wall_clock_cap = a.max_seconds;
            }
            if a.resume {
                c.resume = true;
            }
            if a.no_predictive {
                c.predictive_check = false;
            }
        }
        Command::Sensitivity(a) => {
            apply_model(&mut cfg, &a.model);
            let s = &mut cfg.sensitivity;
            if let Some(t) = a.target {
                s.target = t;
            }
            if let Some(n) = a.n_base {
                s.n_base = n;
            }
            if let Some(r) = a.replicates {
                s.replicates = r;
            }
            if let Some(sel) = &a.select {
                s.selection = sel.clone();
            }
            if let Some(sc) = a.seed_scheme {
                s.seed_scheme = sc;
            }
        }
        Command::Pair(a) => {
            if a.data.is_some() {
                cfg.pair.data = a.data.clone();
            }
            if a.sim.is_some() {
                cfg.pair.sim = a.sim.clone();
            }
        }
        Command::WassersteinStudy(a) => {
            let s = &mut cfg.wasserstein_study;
            if let Some(d) = &a.dims {
                s.dims = d.clone();
            }
            if let Some(n) = &a.sizes {
                s.sizes = n.clone();
            }
            if let Some(r) = a.repetitions {
                s.repetitions = r;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve(cli)?;
    let workers = cfg.workers.unwrap_or_else(default_workers);
    let exec = RayonExecutor::new(workers)?;
    match &cli.command {
        Command::Simulate(_) => commands::simulate(&cfg, &exec),
        Command::Morphometrics(_) => commands::morphometrics(&cfg, exec.workers()),
        Command::Calibrate(_) => commands::calibrate(&cfg, &exec).map(|_| ()),
        Command::Sensitivity(_) => commands::sensitivity(&cfg, &exec).map(|_| ()),
        Command::Pair(_) => commands::pair(&cfg, exec.workers()),
        Command::WassersteinStudy(_) => commands::study(&cfg, &exec),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            let code = exit_code(&e);
            error!("{e:#}");
            ExitCode::from(code as u8)
        }
    }
}
