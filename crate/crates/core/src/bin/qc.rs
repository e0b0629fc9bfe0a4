use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qcbench::cli::{self, Experiment, RunConfig};

#[derive(Parser)]
#[command(name = "qc", version, about = "Quasicontinuum benchmark runner")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        config: PathBuf,
        /// Suppress per-solve progress lines.
        #[arg(short, long)]
        quiet: bool,
    },
    /// Join the summaries of finished runs into one critical-strain table.
    Compare {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Also write the joined error curves here.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Print the default configuration of an experiment.
    PrintDefaults {
        #[arg(default_value = "dipole")]
        experiment: String,
    },
}

fn main() -> ExitCode {
    match execute(Args::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> qcbench::Result<ExitCode> {
    match command {
        Command::Run { config, quiet } => {
            let cfg = RunConfig::from_file(&config)?;
            let log = |line: &str| {
                if !quiet {
                    eprintln!("{line}");
                }
            };
            let outcome = cli::run(&cfg, &log)?;
            for f in &outcome.failures {
                eprintln!("failed: {f}");
            }
            println!("{}", cfg.output.display());
            Ok(if outcome.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Compare { dirs, curves } => {
            let cmp = cli::compare(&dirs)?;
            cmp.write_table(std::io::stdout().lock()).map_err(|e| qcbench::QcError::io("<stdout>", e))?;
            if let Some(path) = &curves {
                let file = std::fs::File::create(path).map_err(|e| qcbench::QcError::io(path, e))?;
                cmp.write_curves(std::io::BufWriter::new(file)).map_err(|e| qcbench::QcError::io(path, e))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::PrintDefaults { experiment } => {
            let exp: Experiment = experiment.parse()?;
            print!("{}", cli::default_text(exp));
            Ok(ExitCode::SUCCESS)
        }
    }
}
