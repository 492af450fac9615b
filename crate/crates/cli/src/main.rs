use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hjwkb_cli::{run_file, Command, Options, DEFAULT_TOL};
use hjwkb_core::wkb::DEFAULT_SEED;

#[derive(Parser)]
#[command(name = "hjwkb", about = "Hamilton-Jacobi and WKB analysis of second-order Lagrangians")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Hessian, constraints, H0 and bracket classification.
    Analyze { file: PathBuf },
    /// Separable Hamilton-Jacobi function and closed-form trajectories.
    Solve { file: PathBuf },
    /// Numeric integration against the closed forms.
    Verify {
        file: PathBuf,
        /// Write the trajectory as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Deviation threshold.
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// WKB wave function and hbar-graded operator residuals.
    Quantize {
        file: PathBuf,
        /// Sampling seed.
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut opts = Options::default();
    let (cmd, file) = match cli.command {
        Cmd::Analyze { file } => (Command::Analyze, file),
        Cmd::Solve { file } => (Command::Solve, file),
        Cmd::Verify { file, csv, tol } => {
            opts.csv = csv;
            opts.tol = tol;
            (Command::Verify, file)
        }
        Cmd::Quantize { file, seed } => {
            opts.seed = seed;
            (Command::Quantize, file)
        }
    };
    let outcome = run_file(cmd, &file, &opts);
    print!("{}", outcome.report);
    if let Some(e) = &outcome.error {
        eprintln!("error: {e}");
    }
    ExitCode::from(outcome.exit_code() as u8)
}
