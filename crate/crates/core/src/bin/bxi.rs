use std::path::PathBuf;
use std::process::ExitCode;

use bxi::experiment::{report, run, verify, ExperimentConfig, Suite};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bxi", version, about = "Brownian intersection exponent experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Merge results.csv files and refit the exponents.
    Report { csv: Vec<PathBuf> },
    /// Run a quick verification suite.
    Verify {
        #[arg(long, value_parser = ["sampler", "extremal", "lemmas", "exponents"])]
        suite: String,
    },
}

fn main() -> ExitCode {
    // Usage errors exit 1 like any other error; 2 is reserved for failed checks.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run { config } => ExperimentConfig::load(&config).and_then(|c| run(&c)).map(|o| {
            print!("{}", bxi::experiment::render_report(&o));
            o.all_passed()
        }),
        Command::Report { csv } => report(&csv).map(|m| {
            print!("{}", m.text);
            true
        }),
        Command::Verify { suite } => suite.parse::<Suite>().and_then(verify).map(|o| {
            for c in &o.checks {
                println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            o.all_passed()
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("bxi: {e}");
            ExitCode::from(1)
        }
    }
}
