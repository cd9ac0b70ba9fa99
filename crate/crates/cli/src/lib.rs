//! Batch front end for `rwa_core`: every command writes a CSV or JSON file
//! plus a `<out>.manifest.json` describing how it was produced.
//!
//! Exit codes: 0 success, 2 usage or parse error, 3 numerical failure,
//! 4 I/O failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub mod commands;
pub mod output;
pub mod parse;

pub use output::RunManifest;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<rwa_core::Error> for CliError {
    fn from(e: rwa_core::Error) -> Self {
        use rwa_core::Error as E;
        match e {
            E::InvalidParameter(_)
            | E::InvalidScheme(_)
            | E::LengthMismatch { .. }
            | E::Budget(_)
            | E::Hypothesis(_)
            | E::TiedAtoms { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "rwa-lab", version, about = "Randomly weighted averages: kernels, transforms, experiments")]
pub struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "RWA_LAB_THREADS")]
    pub threads: Option<usize>,

    /// Output file; standard output when absent (no manifest is written then).
    #[arg(short, long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Conditional CDF of the weighted average given its atoms.
    KernelCdf(KernelCdfArgs),
    /// Unconditional CDF with random atoms, by quadrature or Monte Carlo.
    MixtureCdf(MixtureCdfArgs),
    /// Draw samples of the weighted average.
    Sample(SampleArgs),
    /// Residuals of a Stieltjes transform identity from a JSON config.
    CheckStieltjes(CheckStieltjesArgs),
    /// Sum of expected squared spacings over a θ grid.
    VarianceCurve(VarianceCurveArgs),
    /// Variance curves for n = 10, 20, 40 and θ = 1, 1.05, …, 5.
    Fig1,
    /// Probability that the average misses the mean by more than ε.
    Converge(ConvergeArgs),
    /// Largest uniform spacing statistics.
    MaxSpacing(MaxSpacingArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::KernelCdf(_) => "kernel-cdf",
            Command::MixtureCdf(_) => "mixture-cdf",
            Command::Sample(_) => "sample",
            Command::CheckStieltjes(_) => "check-stieltjes",
            Command::VarianceCurve(_) => "variance-curve",
            Command::Fig1 => "fig1",
            Command::Converge(_) => "converge",
            Command::MaxSpacing(_) => "max-spacing",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct KernelCdfArgs {
    /// Atoms as `x:m` pairs, e.g. `3:1,2:1,1:1`.
    #[arg(long, allow_hyphen_values = true)]
    pub atoms: String,
    /// `lo:hi:steps` or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    /// Atoms closer than this are merged.
    #[arg(long, default_value_t = rwa_core::atoms::DEFAULT_MERGE_TOL)]
    pub merge_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MixtureMethodArg {
    Quadrature,
    Mc,
}

#[derive(Debug, Args, Serialize)]
pub struct MixtureCdfArgs {
    /// Multiplicities, e.g. `1,1,1`.
    #[arg(long)]
    pub scheme: String,
    /// One marginal per atom, or a single one for all.
    #[arg(long, allow_hyphen_values = true)]
    pub marginals: String,
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    #[arg(long, value_enum, default_value_t = MixtureMethodArg::Quadrature)]
    pub method: MixtureMethodArg,
    /// Gauss–Legendre nodes per axis.
    #[arg(long, default_value_t = 24)]
    pub nodes: usize,
    /// Monte Carlo atom draws.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub scheme: String,
    #[arg(long, allow_hyphen_values = true)]
    pub marginals: String,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct CheckStieltjesArgs {
    /// JSON config: {identity, scheme, marginals, mixture, z_points, tolerance?}.
    pub config: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct VarianceCurveArgs {
    /// Comma-separated n values.
    #[arg(long, default_value = "10")]
    pub n: String,
    /// θ grid, `lo:hi:steps` or a list.
    #[arg(long, default_value = "1:5:81")]
    pub theta: String,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvergeArgs {
    #[arg(long, default_value = "exp:1", allow_hyphen_values = true)]
    pub marginal: String,
    /// Target mean; defaults to the marginal's mean.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, default_value = "100,1000,10000")]
    pub n_grid: String,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 1000)]
    pub replicates: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct MaxSpacingArgs {
    #[arg(long, default_value = "10,100,1000,10000")]
    pub n: String,
    #[arg(long, default_value_t = 10_000)]
    pub replicates: usize,
}

/// What a command produced, before it is written out.
pub enum Rendered {
    Table(output::Table),
    /// Pre-rendered JSON document (used when the natural output is not tabular).
    Json(serde_json::Value, output::Table),
}

/// Product of a command: primary output, optional extra files, and a
/// numerical failure to report after the files are written.
pub struct Outcome {
    pub primary: Rendered,
    pub extras: Vec<(String, String)>,
    pub deferred: Option<CliError>,
}

impl Outcome {
    pub fn table(t: output::Table) -> Self {
        Self { primary: Rendered::Table(t), extras: Vec::new(), deferred: None }
    }
}

/// Runs a parsed command line; `args` are recorded in the manifest.
pub fn run(cli: &Cli, args: &[String]) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {t} threads: {e}")))?;
        return pool.install(|| execute(cli, args));
    }
    execute(cli, args)
}

fn execute(cli: &Cli, args: &[String]) -> Result<(), CliError> {
    let outcome = commands::dispatch(cli)?;
    let format = cli.format.unwrap_or(match outcome.primary {
        Rendered::Json(..) => Format::Json,
        Rendered::Table(_) => Format::Csv,
    });
    let text = match (&outcome.primary, format) {
        (Rendered::Table(t), Format::Csv) | (Rendered::Json(_, t), Format::Csv) => t.to_csv(),
        (Rendered::Table(t), Format::Json) => output::to_pretty_json(&t.to_json())?,
        (Rendered::Json(v, _), Format::Json) => output::to_pretty_json(v)?,
    };
    match &cli.out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
        Some(path) => {
            output::write_file(path, &text)?;
            let mut outputs = vec![path.display().to_string()];
            for (suffix, body) in &outcome.extras {
                let p = output::sibling(path, suffix);
                output::write_file(&p, body)?;
                outputs.push(p.display().to_string());
            }
            write_manifest(cli, args, path, outputs)?;
        }
    }
    match outcome.deferred {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn write_manifest(cli: &Cli, args: &[String], path: &Path, outputs: Vec<String>) -> Result<(), CliError> {
    let mut params = serde_json::to_value(&cli.command).map_err(|e| CliError::Io(e.to_string()))?;
    if let serde_json::Value::Object(m) = &mut params {
        m.insert("format".into(), serde_json::to_value(cli.format).unwrap_or_default());
        m.insert("threads".into(), serde_json::to_value(cli.threads).unwrap_or_default());
    } else {
        params = serde_json::json!({ "format": cli.format, "threads": cli.threads });
    }
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cli.seed,
        params,
        args: args.to_vec(),
        outputs,
    };
    output::write_file(&output::sibling(path, "manifest.json"), &output::to_pretty_json(&manifest)?)
}

/// Parses `argv` (including the program name), runs, reports errors on
/// stderr and returns the process exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let recorded: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match run(&cli, &recorded) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
