use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sharp_parabolic_cli::config::Command;
use sharp_parabolic_cli::{emit, output_path, run};

#[derive(Parser)]
#[command(name = "sharp-parabolic", version, about = "Sharp pointwise-estimate coefficients for weakly coupled parabolic systems")]
struct Cli {
    #[command(subcommand)]
    command: Option<Cmd>,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV destination; defaults to `output.path`, then stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "SHARP_PARABOLIC_THREADS")]
    threads: Option<usize>,
    /// Quadrature tolerance; for `verify` also the pass tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, Subcommand)]
enum Cmd {
    /// Accumulated coefficient integrals.
    Coeffs,
    /// Fundamental-matrix entries.
    Kernel,
    /// Sharp coefficients.
    Sharp,
    /// Solution values with their pointwise bounds.
    Solve,
    /// Closed forms against brute-force operator norms.
    Verify,
    /// Sharp coefficients with convergence diagnostics.
    Sweep,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Coeffs => Self::Coeffs,
            Cmd::Kernel => Self::Kernel,
            Cmd::Sharp => Self::Sharp,
            Cmd::Solve => Self::Solve,
            Cmd::Verify => Self::Verify,
            Cmd::Sweep => Self::Sweep,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config) = cli.config else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(2);
    };
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = run(cli.command.map(Command::from), &config, cli.tol).and_then(|r| {
        emit(&r.table, output_path(cli.out, &config).as_ref())?;
        Ok(r)
    });
    match outcome {
        Ok(r) => {
            if let Some(s) = &r.summary {
                eprint!("{s}");
            }
            if r.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
