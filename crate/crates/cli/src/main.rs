use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;

use commands::CliError;

/// Run proof-market scenarios and inspect their results.
#[derive(Parser)]
#[command(name = "proofchain", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its report.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Write one DOT file per snapshot event here.
        #[arg(long)]
        dot_dir: Option<PathBuf>,
    },
    /// Write the dependency graph as of a tick.
    Dot {
        scenario: PathBuf,
        #[arg(long)]
        tick: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rerun every scenario in a directory against `<dir>/golden`.
    Verify {
        dir: PathBuf,
        /// Overwrite the goldens instead of comparing.
        #[arg(long)]
        bless: bool,
    },
}

fn main() -> ExitCode {
    // Usage errors share exit code 1 with bad scenarios; 2 is reserved for
    // conservation failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run {
            scenario,
            report,
            dot_dir,
        } => commands::run(&scenario, &report, dot_dir.as_deref()),
        Command::Dot {
            scenario,
            tick,
            out,
        } => commands::dot(&scenario, tick, &out),
        Command::Verify { dir, bless } => commands::verify(&dir, bless),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let CliError::Mismatch(list) = &e {
                for m in list {
                    eprintln!("{m}");
                }
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
