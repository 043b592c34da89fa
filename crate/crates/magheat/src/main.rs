use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use magheat::{run, RunOptions};

#[derive(Parser)]
#[command(name = "magheat", version, about = "Spectral laboratory for heat equations with critical electromagnetic potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of a scenario file.
    Run {
        scenario: PathBuf,
        /// Output directory (overrides the scenario's output_dir).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Seed for randomized test fields.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for parallel sweeps.
        #[arg(long)]
        jobs: Option<usize>,
        /// Treat warnings as assertion failures.
        #[arg(long)]
        strict: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run { scenario, out_dir, seed, jobs, strict } = cli.command;
    let opts = RunOptions { out_dir, seed, jobs, strict };
    match run(&scenario, &opts) {
        Ok(report) => {
            for t in &report.tasks {
                for a in &t.assertions {
                    println!("[{}] {} {}: {}", if a.pass { "pass" } else { "FAIL" }, t.task, a.name, a.detail);
                }
                for w in &t.warnings {
                    println!("[warn] {}: {w}", t.task);
                }
            }
            println!("outputs in {} (scenario {})", report.out_dir.display(), &report.hash[..12]);
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("magheat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
