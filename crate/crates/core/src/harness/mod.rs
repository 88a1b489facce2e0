//! Multi-seed experiment runs, CSV persistence and final-score tables.

mod config;
mod records;

use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::agent::{run_training, AgentError, MfecAgent};
use crate::envs::EnvKind;
use crate::memory::Strategy;

pub use config::{default_steps, ExperimentConfig};
pub use records::{aggregate_final, format_table, read_csv, write_csv, write_records, FinalScore, CSV_HEADER};

/// Environment variable capping the number of seeds run at once.
pub const THREADS_ENV: &str = "ECMEM_THREADS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("run for seed {seed} failed: {source}")]
    Run { seed: u64, source: AgentError },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Csv { path: PathBuf, message: String },
    #[error("seed {seed} of {group} has {found} evaluations, need {needed}")]
    TooFewEvaluations {
        seed: u64,
        group: String,
        found: usize,
        needed: usize,
    },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl HarnessError {
    pub fn is_config(&self) -> bool {
        matches!(self, HarnessError::Config { .. })
    }
}

/// One evaluation point of one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub seed: u64,
    pub env: EnvKind,
    pub strategy: Strategy,
    pub memory_size: usize,
    pub step: u64,
    pub mean_eval_reward: f64,
}

/// Train one agent per seed and collect every evaluation, ordered by
/// `(seed, step)`.
///
/// Seeds run in parallel on a pool of at most `ECMEM_THREADS` threads (all
/// cores when unset). Each seed owns its agent and environments, so the output
/// does not depend on the thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<EvalRecord>, HarnessError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_cap().unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
    let per_seed: Vec<Vec<EvalRecord>> = pool.install(|| {
        config
            .seeds
            .par_iter()
            .map(|&seed| run_seed(config, seed))
            .collect::<Result<_, _>>()
    })?;
    let mut records: Vec<EvalRecord> = per_seed.into_iter().flatten().collect();
    records.sort_by_key(|r| (r.seed, r.step));
    Ok(records)
}

/// Train and evaluate a single seed.
pub fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<Vec<EvalRecord>, HarnessError> {
    let env = config.env;
    let probe = env.make();
    let run = || -> Result<_, AgentError> {
        let mut agent = MfecAgent::new(
            config.agent_config(),
            probe.observation_dim(),
            probe.action_count(),
            seed,
        )?;
        run_training(&mut agent, &|| env.make(), config.plan(), seed)
    };
    let points = run().map_err(|source| HarnessError::Run { seed, source })?;
    Ok(points
        .into_iter()
        .map(|p| EvalRecord {
            seed,
            env,
            strategy: config.strategy,
            memory_size: config.memory_size,
            step: p.step,
            mean_eval_reward: p.mean_reward,
        })
        .collect())
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}
