//! Command-line front end: builds warping solutions, sweeps `A`, runs the
//! identity checks and writes tables plus a hashed manifest.
//!
//! Exit codes: 0 ok, 1 a verification check failed, 2 usage or config
//! error, 3 numeric failure.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::{run, Outcome};
pub use config::{Command, Format, RunConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "modelforge", version, about = "Rotationally symmetric model manifolds from a radial curvature profile")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Args)]
struct Common {
    /// Config file (`key = value`, `[command]` sections).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Curvature profile: expression in r, `const:<k>` or a built-in name.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "profile_file")]
    profile: Option<String>,
    /// File holding a profile expression or an `r, G` table.
    #[arg(long)]
    profile_file: Option<String>,
    #[arg(long)]
    rmax: Option<String>,
    #[arg(long)]
    rtol: Option<String>,
    #[arg(long)]
    atol: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// csv or record.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Solve the warping problem and write (r, g, g', I).
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<String>,
    },
    /// Sweep A: (t, H, alpha) tables and admissibility verdicts.
    Family {
        #[command(flatten)]
        common: Common,
        /// Comma list or start:stop:step.
        #[arg(long = "A", allow_hyphen_values = true)]
        a: Option<String>,
        #[arg(long = "B", allow_hyphen_values = true)]
        b: Option<String>,
        #[arg(long)]
        samples: Option<String>,
    },
    /// Run every identity check; exit 1 if any fails.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long = "A", allow_hyphen_values = true)]
        a: Option<String>,
        #[arg(long = "B", allow_hyphen_values = true)]
        b: Option<String>,
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        eps: Option<String>,
        /// Check a saved solution instead of solving afresh.
        #[arg(long)]
        solution: Option<String>,
    },
    /// Classify (profile, A).
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long = "A", allow_hyphen_values = true)]
        a: Option<String>,
        #[arg(long)]
        tol: Option<String>,
    },
    /// Integrate a unit-speed geodesic.
    Geodesic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        r0: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        phi0: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        angle: Option<String>,
        #[arg(long)]
        length: Option<String>,
    },
}

type Flags = Vec<(&'static str, Option<String>)>;

fn split(sub: Sub) -> (Command, Common, Flags) {
    match sub {
        Sub::Solve { common, samples } => (Command::Solve, common, vec![("samples", samples)]),
        Sub::Family { common, a, b, samples } => {
            (Command::Family, common, vec![("A", a), ("B", b), ("samples", samples)])
        }
        Sub::Verify { common, a, b, grid, eps, solution } => (
            Command::Verify,
            common,
            vec![("A", a), ("B", b), ("grid", grid), ("eps", eps), ("solution", solution)],
        ),
        Sub::Classify { common, a, tol } => (Command::Classify, common, vec![("A", a), ("tol", tol)]),
        Sub::Geodesic { common, r0, phi0, angle, length } => (
            Command::Geodesic,
            common,
            vec![("r0", r0), ("phi0", phi0), ("angle", angle), ("length", length)],
        ),
    }
}

fn resolve(sub: Sub) -> Result<RunConfig, CliError> {
    let (command, common, flags) = split(sub);
    let mut cfg = RunConfig::defaults(command);
    if let Some(path) = &common.config {
        cfg.load_file(path)?;
    }
    let common_flags = [
        ("profile", common.profile),
        ("profile_file", common.profile_file),
        ("rmax", common.rmax),
        ("rtol", common.rtol),
        ("atol", common.atol),
        ("out", common.out),
        ("format", common.format),
    ];
    for (key, value) in common_flags.into_iter().chain(flags) {
        if let Some(v) = value {
            cfg.set(key, &v)?;
            // A profile given on the command line replaces a file from the config.
            match key {
                "profile" => cfg.profile_file = None,
                "profile_file" => cfg.profile = RunConfig::defaults(command).profile,
                _ => {}
            }
        }
    }
    Ok(cfg)
}

/// Resolve the config, run the command and write the manifest.
pub fn execute(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let outcome = run(cfg, out)?;
    let code = if outcome.passed { 0 } else { 1 };
    output::write_manifest(cfg, &outcome.files, code)?;
    Ok(code)
}

/// Entry point shared by the binary and the tests.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let result = resolve(cli.command).and_then(|cfg| execute(&cfg, out));
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "modelforge: {e}");
            e.exit_code()
        }
    }
}
