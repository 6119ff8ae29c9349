//! Command-line front end: scenario files in, CSV/JSON/SVG artifacts out.
//!
//! Exit codes: `0` success, `1` I/O failure, `2` parse or input error,
//! `3` infeasible scenario, `4` solver failure.

pub mod commands;
pub mod config;
pub mod schema;
pub mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::engine::{AssignMode, InitMode, Scenario};
use crate::role_playing::SharingMode;
use crate::{Error, Result};

pub use commands::{cmd_bench, cmd_negotiate, cmd_plan, cmd_simulate, BenchRow};
pub use config::{load_scenario, load_suite, parse_scenario, Overrides, Suite};

#[derive(Debug, Parser)]
#[command(name = "role-engine", version, about = "Multi-robot role negotiation, assignment and role-playing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build E-Maps and initial paths; report which roles are reachable.
    Negotiate { file: PathBuf },
    /// Qualification matrix, assignment and initial trajectories.
    Plan { file: PathBuf },
    /// Full pipeline with role-playing and monitoring.
    Simulate { file: PathBuf },
    /// Run a benchmark suite and write aggregate metrics.
    Bench { suite: PathBuf },
}

#[derive(Debug, Args)]
pub struct Flags {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default: `out/<scenario or suite name>`).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_init)]
    pub mode_init: Option<InitMode>,
    #[arg(long, global = true, value_parser = parse_assign)]
    pub mode_assign: Option<AssignMode>,
    #[arg(long, global = true, value_parser = parse_sharing)]
    pub mode_sharing: Option<SharingMode>,
    /// Obstacle factor standard deviation for every robot type.
    #[arg(long, global = true)]
    pub sigma_obs: Option<f64>,
    /// Re-read every written CSV and check it against its schema.
    #[arg(long, global = true)]
    pub validate_schemas: bool,
}

fn parse_enum<T: serde::de::DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|_| format!("unknown mode '{s}'"))
}

fn parse_init(s: &str) -> std::result::Result<InitMode, String> {
    parse_enum(s)
}

fn parse_assign(s: &str) -> std::result::Result<AssignMode, String> {
    parse_enum(s)
}

fn parse_sharing(s: &str) -> std::result::Result<SharingMode, String> {
    parse_enum(s)
}

impl Flags {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            init: self.mode_init,
            assign: self.mode_assign,
            sharing: self.mode_sharing,
            sigma_obs: self.sigma_obs,
        }
    }
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 1,
        Error::Input(_) | Error::Parse { .. } => 2,
        Error::Infeasible(_) => 3,
        Error::Solver(_) => 4,
    }
}

fn scenario_with(file: &Path, flags: &Flags) -> Result<Scenario> {
    let mut s = load_scenario(file)?;
    flags.overrides().apply(&mut s)?;
    Ok(s)
}

fn out_dir(flags: &Flags, name: &str) -> PathBuf {
    flags.out_dir.clone().unwrap_or_else(|| Path::new("out").join(name))
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    let flags = &cli.flags;
    let dir = match &cli.command {
        Command::Negotiate { file } => {
            let s = scenario_with(file, flags)?;
            let dir = out_dir(flags, &s.name);
            let r = cmd_negotiate(&s, &dir);
            (dir, r.map(|_| ()))
        }
        Command::Plan { file } => {
            let s = scenario_with(file, flags)?;
            let dir = out_dir(flags, &s.name);
            let r = cmd_plan(&s, &dir);
            (dir, r.map(|_| ()))
        }
        Command::Simulate { file } => {
            let s = scenario_with(file, flags)?;
            let dir = out_dir(flags, &s.name);
            let r = cmd_simulate(&s, &dir);
            (dir, r.map(|_| ()))
        }
        Command::Bench { suite } => {
            let suite = load_suite(suite)?;
            let dir = out_dir(flags, &suite.name);
            let r = cmd_bench(&suite, &dir, &flags.overrides());
            (dir, r.map(|rows| print!("{}", commands::aggregate(&rows, &suite.modes))))
        }
    };
    let (dir, result) = dir;
    if flags.validate_schemas && dir.exists() {
        let n = schema::validate_dir(&dir)?;
        eprintln!("schemas ok: {n} file(s) checked");
    }
    result
}

/// Binary entry point.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
