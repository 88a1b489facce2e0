use std::path::Path;

use serde::Deserialize;

use super::HarnessError;
use crate::agent::{AgentConfig, EpsilonSchedule, TrainingPlan};
use crate::envs::EnvKind;
use crate::memory::{Backend, KernelParams, Strategy};

/// Everything needed to run one multi-seed experiment.
///
/// Config files are TOML with an `[experiment]` and an optional `[agent]`
/// table:
///
/// ```toml
/// [experiment]
/// env = "cartpole"          # cartpole | acrobot | openroom | fourroom
/// strategy = "dkm"          # lru | rew | sur | km | dkm
/// memory_size = 50          # entries per action
/// total_steps = 15000       # default: 15000 for cartpole, 20000 otherwise
/// eval_interval = 500
/// eval_episodes = 10
/// seeds = [0, 1, 2, 3, 4]   # or a count: seeds = 5
///
/// [agent]
/// k = 11
/// delta = 0.001
/// discount = 0.99
/// epsilon_initial = 1.0
/// epsilon_final = 0.005
/// epsilon_anneal_start = 5000
/// epsilon_anneal_end = 25000
/// projection = 0            # key size, 0 = raw observations
/// backend = "tree"          # tree | naive
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    pub strategy: Strategy,
    pub memory_size: usize,
    pub total_steps: u64,
    pub eval_interval: u64,
    pub eval_episodes: usize,
    pub seeds: Vec<u64>,
    pub k: usize,
    pub delta: f64,
    pub discount: f64,
    pub epsilon: EpsilonSchedule,
    pub projection: Option<usize>,
    pub backend: Backend,
}

impl ExperimentConfig {
    /// Defaults for `env`, with five seeds.
    pub fn new(env: EnvKind, strategy: Strategy, memory_size: usize) -> Self {
        let agent = AgentConfig::default();
        Self {
            env,
            strategy,
            memory_size,
            total_steps: default_steps(env),
            eval_interval: 500,
            eval_episodes: 10,
            seeds: (0..5).collect(),
            k: agent.kernel.k,
            delta: agent.kernel.delta,
            discount: agent.discount,
            epsilon: agent.epsilon,
            projection: agent.projection,
            backend: agent.backend,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| HarnessError::Config {
            field: "file".into(),
            message: e.message().to_string(),
        })?;
        file.resolve()
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |field: &str, message: String| {
            Err(HarnessError::Config {
                field: field.into(),
                message,
            })
        };
        if self.memory_size == 0 {
            return fail("experiment.memory_size", "must be at least 1".into());
        }
        if self.seeds.is_empty() {
            return fail("experiment.seeds", "need at least one seed".into());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return fail("experiment.seeds", format!("seed {} listed twice", w[0]));
        }
        if let Err(e) = self.plan().validate() {
            return fail("experiment", e.to_string());
        }
        if let Err(e) = KernelParams::new(self.delta, self.k) {
            return fail("agent.k/agent.delta", e.to_string());
        }
        if let Err(e) = self.epsilon.validate() {
            return fail("agent.epsilon", e.to_string());
        }
        if let Err(e) = self.agent_config().validate() {
            return fail("agent", e.to_string());
        }
        Ok(())
    }

    pub fn agent_config(&self) -> AgentConfig {
        AgentConfig {
            discount: self.discount,
            kernel: KernelParams {
                delta: self.delta,
                k: self.k,
            },
            capacity: self.memory_size,
            strategy: self.strategy,
            backend: self.backend,
            epsilon: self.epsilon,
            projection: self.projection,
        }
    }

    pub fn plan(&self) -> TrainingPlan {
        TrainingPlan {
            total_steps: self.total_steps,
            eval_interval: self.eval_interval,
            eval_episodes: self.eval_episodes,
        }
    }
}

pub fn default_steps(env: EnvKind) -> u64 {
    match env {
        EnvKind::CartPole => 15_000,
        _ => 20_000,
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: ExperimentSection,
    #[serde(default)]
    agent: AgentSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    env: String,
    strategy: String,
    memory_size: i64,
    total_steps: Option<u64>,
    eval_interval: Option<u64>,
    eval_episodes: Option<usize>,
    seeds: Option<Seeds>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentSection {
    k: Option<usize>,
    delta: Option<f64>,
    discount: Option<f64>,
    epsilon_initial: Option<f64>,
    epsilon_final: Option<f64>,
    epsilon_anneal_start: Option<u64>,
    epsilon_anneal_end: Option<u64>,
    projection: Option<usize>,
    backend: Option<String>,
}

impl ConfigFile {
    fn resolve(self) -> Result<ExperimentConfig, HarnessError> {
        let ex = self.experiment;
        let env: EnvKind = ex.env.parse().map_err(|e: crate::envs::EnvError| HarnessError::Config {
            field: "experiment.env".into(),
            message: e.to_string(),
        })?;
        let strategy: Strategy = ex.strategy.parse().map_err(|message| HarnessError::Config {
            field: "experiment.strategy".into(),
            message,
        })?;
        let memory_size = usize::try_from(ex.memory_size).map_err(|_| HarnessError::Config {
            field: "experiment.memory_size".into(),
            message: format!("must be at least 1, got {}", ex.memory_size),
        })?;

        let mut cfg = ExperimentConfig::new(env, strategy, memory_size);
        if let Some(v) = ex.total_steps {
            cfg.total_steps = v;
        }
        if let Some(v) = ex.eval_interval {
            cfg.eval_interval = v;
        }
        if let Some(v) = ex.eval_episodes {
            cfg.eval_episodes = v;
        }
        match ex.seeds {
            Some(Seeds::Count(n)) => cfg.seeds = (0..n).collect(),
            Some(Seeds::List(list)) => cfg.seeds = list,
            None => {}
        }

        let ag = self.agent;
        cfg.k = ag.k.unwrap_or(cfg.k);
        cfg.delta = ag.delta.unwrap_or(cfg.delta);
        cfg.discount = ag.discount.unwrap_or(cfg.discount);
        cfg.epsilon.initial = ag.epsilon_initial.unwrap_or(cfg.epsilon.initial);
        cfg.epsilon.final_value = ag.epsilon_final.unwrap_or(cfg.epsilon.final_value);
        cfg.epsilon.anneal_start = ag.epsilon_anneal_start.unwrap_or(cfg.epsilon.anneal_start);
        cfg.epsilon.anneal_end = ag.epsilon_anneal_end.unwrap_or(cfg.epsilon.anneal_end);
        if let Some(p) = ag.projection {
            cfg.projection = (p > 0).then_some(p);
        }
        if let Some(b) = ag.backend {
            cfg.backend = b.parse().map_err(|message| HarnessError::Config {
                field: "agent.backend".into(),
                message,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
