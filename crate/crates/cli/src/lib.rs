//! Configuration-driven front end for the `sharp-parabolic` library.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};

use config::{Command, RunConfig};
use error::{CliError, Result};
use output::Table;

/// Outcome of one invocation.
pub struct Run {
    pub table: Table,
    /// Human-readable summary for stderr.
    pub summary: Option<String>,
    pub success: bool,
}

/// `--tol` sets `numerics.quad_tol`; for `verify` it also replaces the
/// per-check pass tolerance.
pub fn run(command: Option<Command>, config: &Path, tol: Option<f64>) -> Result<Run> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(tol) = tol {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(CliError::field("--tol", "must lie in (0, 1)"));
        }
        cfg.numerics.quad_tol = tol;
    }
    let command = match (command, cfg.request.command) {
        (Some(c), Some(r)) if c != r => {
            return Err(CliError::field("request.command", format!("config requests `{}` but `{}` was invoked", r.name(), c.name())))
        }
        (Some(c), _) | (None, Some(c)) => c,
        (None, None) => return Err(CliError::field("request.command", "no command given on the command line or in the config")),
    };
    let table = match command {
        Command::Coeffs => commands::coeffs(&cfg)?,
        Command::Kernel => commands::kernel(&cfg)?,
        Command::Sharp => commands::sharp(&cfg)?,
        Command::Sweep => commands::sweep(&cfg)?,
        Command::Solve => commands::solve(&cfg)?,
        Command::Verify => {
            let checks = verify::checks(&cfg, tol)?;
            let success = checks.iter().all(|c| c.pass);
            return Ok(Run { table: verify::table(&checks), summary: Some(verify::summary(&checks)), success });
        }
    };
    Ok(Run { table, summary: None, success: true })
}

/// Write to `path` (or stdout when `None`).
pub fn emit(table: &Table, path: Option<&PathBuf>) -> Result<()> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p)?;
            let mut w = std::io::BufWriter::new(file);
            table.write(&mut w)?;
            w.flush()?;
        }
        None => table.write(std::io::stdout().lock())?,
    }
    Ok(())
}

/// Output path from the flag, else from the config.
pub fn output_path(flag: Option<PathBuf>, config: &Path) -> Option<PathBuf> {
    flag.or_else(|| RunConfig::load(config).ok().and_then(|c| c.output))
}
