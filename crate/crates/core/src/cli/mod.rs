//! Command-line front end: subcommands, config resolution and output layout.
//!
//! Config files are TOML with the sections `[problem]`, `[mesh]`, `[target]`,
//! `[run]`, `[solve]`, `[study]` and `[output]`; see [`Config`] for keys and
//! defaults. `--set section.key=value` overrides single keys.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{
    apply_override, resolve, Config, MeshConfig, OutputConfig, ProblemConfig, SolveConfig, SolveMethod, StudyConfig,
    TargetConfig,
};

/// Environment variable naming the default output root.
pub const OUTPUT_ENV: &str = "VISHAPE_OUTPUT";

#[derive(Debug, Parser)]
#[command(name = "vishape", version, about = "Shape optimization with obstacle-type variational inequalities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory. Defaults to `$VISHAPE_OUTPUT`, then `vishape-out`.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Override a config key, e.g. `--set run.nu=1e-4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,

    /// Shorthand for `--set problem.obstacle=NAME`.
    #[arg(long, global = true)]
    pub obstacle: Option<String>,

    /// Also write legacy VTK files.
    #[arg(long, global = true)]
    pub vtk: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve the state equation on the initial mesh.
    SolveState,
    /// Solve state and adjoint on the initial mesh.
    SolveAdjoint,
    /// Shape derivative and elasticity gradient on the initial mesh.
    Gradient,
    /// Run the safeguarded descent.
    Optimize,
    /// Smoothed against unsmoothed sign over the `c` and `γ` lists.
    StudySign,
    /// State and adjoint distances over the `c` and `γ` lists.
    StudyConvergence,
    /// Sign distance on meshes refined near the free boundary.
    StudyRefinement,
    /// Compute the target state on the target mesh.
    GenerateTarget,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveState => "solve-state",
            Command::SolveAdjoint => "solve-adjoint",
            Command::Gradient => "gradient",
            Command::Optimize => "optimize",
            Command::StudySign => "study-sign",
            Command::StudyConvergence => "study-convergence",
            Command::StudyRefinement => "study-refinement",
            Command::GenerateTarget => "generate-target",
        }
    }
}

/// Failure categories with their exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(crate::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::Io(e) => CliError::Io(e.to_string()),
            crate::Error::Parse(m) => CliError::Io(format!("malformed input: {m}")),
            e => CliError::Solver(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn output_dir(cli: &Cli) -> PathBuf {
    cli.output
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("vishape-out"))
}

/// Resolves the config of a parsed command line.
pub fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let text = match &cli.config {
        Some(path) => Some(
            std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        ),
        None => None,
    };
    let mut overrides = cli.overrides.clone();
    if let Some(o) = &cli.obstacle {
        overrides.push(format!("problem.obstacle=\"{o}\""));
    }
    if cli.vtk {
        overrides.push("output.vtk=true".into());
    }
    resolve(text.as_deref(), &overrides)
}

/// Runs a parsed command line and returns the path of its summary file.
pub fn run(cli: &Cli) -> Result<PathBuf, CliError> {
    let cfg = load_config(cli)?;
    let dir = output_dir(cli);
    commands::execute(cli.command, &cfg, &dir)
}

/// Parses `args`, runs, reports errors on stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(summary) => {
            println!("{}", summary.display());
            0
        }
        Err(e) => {
            eprintln!("vishape {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}
