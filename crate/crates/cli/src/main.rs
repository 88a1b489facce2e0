use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ecmem_core::analysis::{export_study, final_phase2_fractions, AnalysisError, DEFAULT_STUDY_MEMORY};
use ecmem_core::envs::{EnvKind, StreamSpec};
use ecmem_core::harness::{
    aggregate_final, format_table, read_csv, run_experiment, write_csv, write_records, ExperimentConfig, HarnessError,
};
use ecmem_core::memory::Strategy;

#[derive(Parser)]
#[command(name = "ecmem", version, about = "Episodic-control memory experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent per seed and write the evaluation curve as CSV.
    Run {
        /// TOML experiment file.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        env: Option<String>,
        /// lru, rew, sur, km or dkm.
        #[arg(long)]
        strategy: Option<String>,
        /// Entries per action.
        #[arg(long)]
        memory_size: Option<usize>,
        /// Run seeds 0..n.
        #[arg(long)]
        seeds: Option<u64>,
        /// Training steps per seed.
        #[arg(long)]
        steps: Option<u64>,
        /// Output CSV; written to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the mean and std of each seed's last evaluations.
    Table {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        last: usize,
    },
    /// Run the drifting-stream memory study and export CSVs.
    StreamStudy {
        #[arg(long, default_value_t = DEFAULT_STUDY_MEMORY)]
        memory_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

enum Failure {
    Config(String),
    Other(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Other(e.to_string())
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::InvalidParameter(m) => Failure::Config(m),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn config_err(flag: &str, message: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("config error in `{flag}`: {message}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run {
            config,
            env,
            strategy,
            memory_size,
            seeds,
            steps,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config).map_err(|e| Failure::Config(e.to_string()))?;
            if let Some(e) = env {
                cfg.env = e.parse::<EnvKind>().map_err(|err| config_err("--env", err))?;
            }
            if let Some(s) = strategy {
                cfg.strategy = s.parse::<Strategy>().map_err(|err| config_err("--strategy", err))?;
            }
            if let Some(m) = memory_size {
                cfg.memory_size = m;
            }
            if let Some(n) = seeds {
                cfg.seeds = (0..n).collect();
            }
            if let Some(t) = steps {
                cfg.total_steps = t;
            }
            cfg.validate()?;
            let records = run_experiment(&cfg)?;
            match out {
                Some(path) => {
                    write_csv(&records, &path)?;
                    if let Ok(scores) = aggregate_final(&records, 10) {
                        print!("{}", format_table(&scores));
                    }
                    eprintln!("wrote {} rows to {}", records.len(), path.display());
                }
                None => write_records(&records, std::io::stdout().lock())
                    .map_err(|e| Failure::Other(format!("stdout: {e}")))?,
            }
            Ok(())
        }
        Command::Table { input, last } => {
            let records = read_csv(&input)?;
            let scores = aggregate_final(&records, last)?;
            print!("{}", format_table(&scores));
            Ok(())
        }
        Command::StreamStudy {
            memory_size,
            seed,
            out_dir,
        } => {
            let spec = StreamSpec {
                seed,
                ..StreamSpec::default()
            };
            let export = export_study(&spec, memory_size, &out_dir)?;
            println!("fraction of final centroids in the phase-2 region:");
            for (method, frac) in final_phase2_fractions(&spec, &export.snapshots)? {
                println!("  {:<7} {frac:.3}", method.name());
            }
            for f in &export.files {
                eprintln!("wrote {}", f.display());
            }
            Ok(())
        }
    }
}
