//! Command-line front end for `stark-ladder`.
//!
//! Exit codes: 0 ok, 2 invalid input, 3 I/O, 4 solver failure, 5 integration
//! quality.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub mod commands;
pub mod output;

pub use commands::{
    cmd_continue, cmd_count, cmd_evolve, cmd_state, cmd_tree, render_tree_csv, render_tree_json,
    ContinueReport, CountReport, EvolveOutput, EvolveReport, StateFile,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("integration failure: {0}")]
    Integration(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Io(_) => 3,
            CliError::Solver(_) => 4,
            CliError::Integration(_) => 5,
        }
    }
}

impl From<stark_ladder::Error> for CliError {
    fn from(e: stark_ladder::Error) -> Self {
        use stark_ladder::Error as E;
        match e {
            E::Domain(_) | E::Inadmissible { .. } | E::Configuration(_) => {
                CliError::Input(e.to_string())
            }
            E::Continuation {
                beta,
                ref path,
                ref source,
            } => {
                let path = serde_json::to_string(path).unwrap_or_default();
                CliError::Solver(format!(
                    "continuation failed at beta = {beta}: {source}\npartial path: {path}"
                ))
            }
            E::Resonance { .. } | E::SingularJacobian { .. } | E::NoConvergence { .. } => {
                CliError::Solver(e.to_string())
            }
            E::IntegrationQuality { .. } => CliError::Integration(e.to_string()),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum EvolveMode {
    /// Evolve each stationary state separately and superpose the results.
    Superposed,
    /// Evolve the summed vector as a single initial condition.
    Direct,
}

#[derive(Debug, Parser)]
#[command(
    name = "stark-ladder",
    version,
    about = "Bifurcation trees of Stark-Wannier ladders"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Branch count F(x) and total number of branches per rung.
    Count(CountArgs),
    /// Energies mu/f of every branch over a range of nu/f.
    Tree(TreeArgs),
    /// One stationary state, optionally continued to beta > 0.
    State(StateArgs),
    /// Continuation path of one branch in beta.
    Continue(ContinueArgs),
    /// Time evolution and beat spectrum.
    Evolve(EvolveArgs),
}

/// `nu/f` given either as a ratio or as an explicit pair.
#[derive(Debug, Clone, Default, Args)]
pub struct Ratio {
    /// Ratio nu/f.
    #[arg(long)]
    pub x: Option<f64>,
    /// Nonlinearity nu.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Tilt f (defaults to 1).
    #[arg(long)]
    pub f: Option<f64>,
}

impl Ratio {
    /// `(nu, f)`.
    pub fn resolve(&self) -> Result<(f64, f64), CliError> {
        let f = self.f.unwrap_or(1.0);
        if !(f.is_finite() && f > 0.0) {
            return Err(CliError::Input(format!("--f must be positive, got {f}")));
        }
        let nu = match (self.x, self.nu) {
            (Some(x), None) => x * f,
            (None, Some(nu)) => nu,
            (Some(x), Some(nu)) => {
                if (nu / f - x).abs() > 1e-12 * x.abs().max(1.0) {
                    return Err(CliError::Input(format!(
                        "--x {x} disagrees with --nu {nu} / --f {f}"
                    )));
                }
                nu
            }
            (None, None) => return Err(CliError::Input("give --x or --nu".into())),
        };
        if !(nu.is_finite() && nu > 0.0) {
            return Err(CliError::Input(format!("nu must be positive, got {nu}")));
        }
        Ok((nu, f))
    }
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct CountArgs {
    #[arg(long)]
    pub x: f64,
    /// Print JSON instead of the text report.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct TreeArgs {
    #[arg(long, default_value_t = 0.0)]
    pub x_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub x_max: f64,
    #[arg(long, default_value_t = 1001)]
    pub samples: usize,
    /// Largest branch threshold enumerated.
    #[arg(long, default_value_t = 5000)]
    pub max_n: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct StateArgs {
    /// Solution-set, e.g. `0,1,3`.
    #[arg(long, allow_hyphen_values = true)]
    pub set: String,
    #[command(flatten)]
    pub ratio: Ratio,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    /// Sign pattern such as `+-`, or `random` (uses --seed).
    #[arg(long, allow_hyphen_values = true)]
    pub signs: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sites of margin around the set.
    #[arg(long, default_value_t = 5)]
    pub margin: i64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct ContinueArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub set: String,
    #[command(flatten)]
    pub ratio: Ratio,
    /// Target hopping beta.
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub signs: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub margin: i64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct EvolveArgs {
    /// Stationary state written by `state`; evolved directly.
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[command(flatten)]
    pub ratio: Ratio,
    /// Hopping beta (overrides the value stored in --state).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Step in t' = f t / hbar (default 2π/2048).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time in t' (default 20 Bloch periods).
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Site whose density is analysed (default: the superposition's well).
    #[arg(long)]
    pub site: Option<i64>,
    /// Well j on which the three-state superposition is centred.
    #[arg(long, default_value_t = 0)]
    pub well: i64,
    #[arg(long, value_enum, default_value_t = EvolveMode::Superposed)]
    pub mode: EvolveMode,
    /// Keep every N-th time step in the CSV (default: at most ~4096 rows per site).
    #[arg(long)]
    pub every: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Spectral report path (default: `<out>` with extension `peaks.json`).
    #[arg(long)]
    pub peaks_out: Option<PathBuf>,
}

/// Executes one parsed command, writing its outputs.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    use output::{emit, to_json, write_atomic};
    match &cli.command {
        Command::Count(args) => {
            let report = cmd_count(args.x)?;
            let text = match args.format {
                Some(Format::Json) => to_json(&report)?,
                _ => format!("{report}\n").into_bytes(),
            };
            emit(None, &text)
        }
        Command::Tree(args) => {
            let tree = cmd_tree(args)?;
            let body = match args.format {
                Format::Csv => render_tree_csv(&tree).into_bytes(),
                Format::Json => render_tree_json(&tree)?,
            };
            emit(args.out.as_deref(), &body)
        }
        Command::State(args) => {
            let state = cmd_state(args)?;
            let body = match args.format {
                Format::Json => to_json(&state)?,
                Format::Csv => state.to_csv().into_bytes(),
            };
            emit(args.out.as_deref(), &body)
        }
        Command::Continue(args) => {
            let report = cmd_continue(args)?;
            let body = match args.format {
                Format::Json => to_json(&report)?,
                Format::Csv => report.to_csv().into_bytes(),
            };
            emit(args.out.as_deref(), &body)
        }
        Command::Evolve(args) => {
            let out = cmd_evolve(args)?;
            write_atomic(&args.out, out.csv.as_bytes())?;
            let peaks = args
                .peaks_out
                .clone()
                .unwrap_or_else(|| args.out.with_extension("peaks.json"));
            write_atomic(&peaks, &to_json(&out.report)?)
        }
    }
}
