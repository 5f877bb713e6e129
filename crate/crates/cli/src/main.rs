use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dcqe_cli::commands::{execute, Invocation};
use dcqe_cli::config::Command;

#[derive(Parser)]
#[command(name = "dcqe", version, about = "Causal effect estimation over row- and column-partitioned data")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthetic runs on generated data.
    Simulate(Common),
    /// One scenario on party CSV files.
    Run(Common),
    /// The employment-program benchmark table.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Pooled CSV file; overrides evaluate.data.
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides scenario.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common, data) = match cli.command {
        Cmd::Simulate(c) => (Command::Simulate, c, None),
        Cmd::Run(c) => (Command::Run, c, None),
        Cmd::Evaluate { common, data } => (Command::Evaluate, common, data),
    };
    let inv = Invocation { command, config: common.config, seed: common.seed, out: common.out, data };
    match execute(&inv) {
        Ok((report, files)) => {
            print!("{}", report.to_txt());
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dcqe: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
