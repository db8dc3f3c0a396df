//! Command-line front end for the `qnnae` binary.
//!
//! Exit codes: 0 on success, 1 on usage, input or data errors, 2 when a
//! resource limit (grid budget, simulator capacity) is hit.

pub mod config;
pub mod report;
pub mod svg;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use qnnae_core::dataio::{self, Dataset, SyntheticKind};
use qnnae_core::pqm::{self, BitString, PatternMemory, PqmError};
use qnnae_core::qnnae::{
    self, estimate_by_repetition, ArchitectureReport, EvalError, EvalOptions, PreparedData,
    SweepMode, WeightGrid,
};
use qnnae_core::qsim::QsimError;

use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Resource(_) => 2,
        }
    }
}

impl From<PqmError> for CliError {
    fn from(e: PqmError) -> Self {
        match e {
            PqmError::Capacity { .. } | PqmError::Simulator(QsimError::TooManyQubits { .. }) => {
                CliError::Resource(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Pqm(p) => p.into(),
            EvalError::BudgetExceeded { .. } | EvalError::ThreadPool(_) => {
                CliError::Resource(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<dataio::DataError> for CliError {
    fn from(e: dataio::DataError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "qnnae", version, about = "Quantum-memory based neural architecture evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Retrieval probabilities of an input against a memory file.
    Pqm(PqmArgs),
    /// Score a single hidden-layer size.
    Evaluate(EvaluateArgs),
    /// Score every hidden-layer size in a range.
    Sweep(SweepArgs),
    /// Write a synthetic dataset as CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct PqmArgs {
    /// One pattern per line; `#` comments and blank lines are ignored.
    pub memory: PathBuf,
    /// Input bit string, e.g. 0101.
    pub input: String,
    /// Also run the state-vector circuit and report the difference.
    #[arg(long)]
    pub circuit: bool,
    /// Measure the control qubit this many times (implies --circuit).
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long, default_value_t = config::DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Dataset CSV with a `label` column.
    pub dataset: PathBuf,
    /// Flat key=value file; flags given here override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// L2 penalty.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// logistic, tanh or relu.
    #[arg(long)]
    pub activation: Option<String>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub no_stratify: bool,
    /// Worker threads, 0 for one per core. Output does not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Enumerate a weight grid instead of sampling.
    #[arg(long)]
    pub exhaustive: bool,
    /// Comma-separated grid levels.
    #[arg(long, allow_hyphen_values = true)]
    pub levels: Option<String>,
    /// Maximum number of grid points.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Train from each grid point instead of using it as final weights.
    #[arg(long)]
    pub train_grid: bool,
    /// Report CSV path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the performance bit matrix to this path.
    #[arg(long)]
    pub dump_performance: Option<PathBuf>,
    /// Also estimate the score from this many simulated one-bit runs.
    #[arg(long)]
    pub kappa: Option<u64>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub hidden: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Half-open range of hidden sizes.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub hidden_range: Option<Vec<usize>>,
    /// Scatter plot of mean accuracy against score.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// xor, two_gaussians or rings.
    #[arg(long)]
    pub kind: String,
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
    #[arg(long, default_value_t = config::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Pqm(a) => cmd_pqm(&a, out),
        Command::Evaluate(a) => cmd_evaluate(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Synth(a) => cmd_synth(&a, out),
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Input(format!("stdout: {e}")))
}

fn cmd_pqm(a: &PqmArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let memory = PatternMemory::load(&a.memory)?;
    let input: BitString = a.input.trim().parse()?;
    let analytic = pqm::retrieve_analytic(&memory, &input)?;
    let mut text = format!("p0={:.6} p1={:.6}\n", analytic.p0, analytic.p1);
    if a.circuit || a.shots.is_some() {
        let exact = pqm::retrieve_exact_from_circuit(&memory, &input)?;
        text += &format!(
            "circuit p0={:.6} p1={:.6}\ndifference={:.3e}\n",
            exact.p0,
            exact.p1,
            (exact.p0 - analytic.p0).abs()
        );
        if let Some(shots) = a.shots {
            let est = pqm::retrieve_circuit(&memory, &input, shots, a.seed)?;
            text += &format!(
                "shots={shots} zeros={} ones={} p0_estimate={:.6}\n",
                est.zeros, est.ones, est.outcome.p0
            );
        }
    }
    write_out(out, &text)
}

/// Defaults, then the config file, then explicit flags.
pub fn resolve_config(a: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &a.config {
        cfg.apply(&config::load_config_file(path)?)?;
    }
    let flags: [(&str, Option<String>); 12] = [
        ("samples", a.samples.map(|v| v.to_string())),
        ("seed", a.seed.map(|v| v.to_string())),
        ("alpha", a.alpha.map(|v| v.to_string())),
        ("max_iter", a.max_iter.map(|v| v.to_string())),
        ("learning_rate", a.learning_rate.map(|v| v.to_string())),
        ("tolerance", a.tolerance.map(|v| v.to_string())),
        ("activation", a.activation.clone()),
        ("train_fraction", a.train_fraction.map(|v| v.to_string())),
        ("threads", a.threads.map(|v| v.to_string())),
        ("levels", a.levels.clone()),
        ("budget", a.budget.map(|v| v.to_string())),
        ("stratified", a.no_stratify.then(|| "false".to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    if a.train_grid {
        cfg.train_grid = true;
    }
    cfg.train
        .validate()
        .map_err(|e| CliError::Input(e.to_string()))?;
    Ok(cfg)
}

fn prepare(a: &RunArgs, cfg: &RunConfig) -> Result<PreparedData, CliError> {
    let dataset = dataio::load_csv(&a.dataset)?;
    Ok(PreparedData::new(&dataset, cfg.split())?)
}

fn options(cfg: &RunConfig) -> EvalOptions {
    EvalOptions {
        train: cfg.train,
        threads: cfg.threads,
    }
}

fn sweep_mode(a: &RunArgs, cfg: &RunConfig) -> SweepMode {
    if a.exhaustive {
        SweepMode::Exhaustive {
            levels: cfg.levels.clone(),
            budget: cfg.budget,
            train: cfg.train_grid,
        }
    } else {
        SweepMode::Sampled {
            num_samples: cfg.samples,
            seed: cfg.seed,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error(path, e))
}

/// Writes the CSV to `--out` or `out`, then the optional extras.
fn emit(
    a: &RunArgs,
    cfg: &RunConfig,
    reports: &[ArchitectureReport],
    out: &mut dyn Write,
) -> Result<(), CliError> {
    match &a.out {
        Some(path) => report::write_csv(create(path)?, reports).map_err(|e| io_error(path, e))?,
        None => report::write_csv(&mut *out, reports)
            .map_err(|e| CliError::Input(format!("stdout: {e}")))?,
    }
    if let Some(path) = &a.dump_performance {
        report::write_performances(create(path)?, reports).map_err(|e| io_error(path, e))?;
    }
    if let Some(kappa) = a.kappa {
        for r in reports {
            let est = estimate_by_repetition(r.score_p0, kappa, cfg.seed);
            log::info!(
                "hidden={} kappa={} estimate={:.6} std_error={:.6}",
                r.architecture.hidden,
                kappa,
                est.estimate,
                est.std_error
            );
            if a.out.is_some() {
                write_out(
                    out,
                    &format!(
                        "hidden={} kappa={} p0_estimate={:.6} std_error={:.6}\n",
                        r.architecture.hidden, kappa, est.estimate, est.std_error
                    ),
                )?;
            }
        }
    }
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = resolve_config(&a.run)?;
    if a.run.dry_run {
        return write_out(out, &format!("{cfg}hidden={}\n", a.hidden));
    }
    let data = prepare(&a.run, &cfg)?;
    let arch = data.architecture(a.hidden, cfg.activation)?;
    let opts = options(&cfg);
    let report = match sweep_mode(&a.run, &cfg) {
        SweepMode::Exhaustive {
            levels,
            budget,
            train,
        } => {
            let grid = WeightGrid::new(levels, arch.weight_count(), budget)?;
            qnnae::evaluate_exhaustive(&arch, &data, &grid, train, &opts)?
        }
        SweepMode::Sampled { num_samples, seed } => {
            qnnae::evaluate_sampled(&arch, &data, num_samples, seed, &opts)?
        }
    };
    log::info!(
        "score_p0={:.6} mean_accuracy={:.6}",
        report.score_p0,
        report.mean_accuracy
    );
    let reports = [report];
    emit(&a.run, &cfg, &reports, out)?;
    if a.run.out.is_some() {
        write_out(
            out,
            &format!(
                "score_p0={:.6} mean_accuracy={:.6}\n",
                reports[0].score_p0, reports[0].mean_accuracy
            ),
        )?;
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = resolve_config(&a.run)?;
    if let Some(r) = &a.hidden_range {
        cfg.hidden_range = (r[0], r[1]);
    }
    if a.run.dry_run {
        return write_out(out, &cfg.to_string());
    }
    let data = prepare(&a.run, &cfg)?;
    let reports = qnnae::sweep(
        cfg.hidden_range,
        &data,
        cfg.activation,
        &sweep_mode(&a.run, &cfg),
        &options(&cfg),
    )?;
    emit(&a.run, &cfg, &reports, out)?;
    if let Some(path) = &a.plot {
        let points: Vec<(String, f64, f64)> = reports
            .iter()
            .map(|r| (format!("hidden={}", r.architecture.hidden), r.mean_accuracy, r.score_p0))
            .collect();
        let title = format!("{}: mean accuracy vs P(c=0)", data.train.name());
        std::fs::write(path, svg::scatter(&title, &points)).map_err(|e| io_error(path, e))?;
    }
    Ok(())
}

fn cmd_synth(a: &SynthArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let kind: SyntheticKind = a
        .kind
        .parse()
        .map_err(|_| CliError::Input(format!("unknown synthetic kind {:?}", a.kind)))?;
    let ds: Dataset = dataio::make_synthetic(kind, a.n, a.noise, a.seed)?;
    match &a.out {
        Some(path) => dataio::save_csv(&ds, path)?,
        None => dataio::write_csv(&ds, &mut *out)?,
    }
    Ok(())
}
