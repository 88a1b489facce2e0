//! Model-free episodic control agent.
//!
//! The agent keeps one [`ActionMemory`] per discrete action. Actions are
//! chosen epsilon-greedily from the memories' k-NN value estimates, and at the
//! end of each episode every visited `(key, action)` pair is written back with
//! its discounted Monte-Carlo return.

mod projection;
mod schedule;
mod training;

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::envs::EnvError;
use crate::memory::{
    lookup_best_action, peek_best_action, ActionMemory, Backend, InsertEffect, KernelParams, Key,
    MemoryConfig, MemoryError, Strategy,
};

pub use projection::ProjectionMatrix;
pub use schedule::EpsilonSchedule;
pub use training::{evaluate, run_training, run_training_observed, EvalPoint, TrainingPlan};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("invalid agent configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentConfig {
    /// Discount factor lambda.
    pub discount: f64,
    pub kernel: KernelParams,
    /// Memory capacity per action.
    pub capacity: usize,
    pub strategy: Strategy,
    pub backend: Backend,
    pub epsilon: EpsilonSchedule,
    /// Key size of the Gaussian random projection; `None` uses raw observations.
    pub projection: Option<usize>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            discount: 0.99,
            kernel: KernelParams::default(),
            capacity: 10_000,
            strategy: Strategy::Lru,
            backend: Backend::SpatialTree,
            epsilon: EpsilonSchedule::default(),
            projection: None,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(AgentError::InvalidConfig(format!(
                "discount must lie in [0, 1], got {}",
                self.discount
            )));
        }
        if self.capacity == 0 {
            return Err(AgentError::InvalidConfig("memory capacity must be at least 1".into()));
        }
        if self.projection == Some(0) {
            return Err(AgentError::InvalidConfig("projection key size must be positive".into()));
        }
        KernelParams::new(self.kernel.delta, self.kernel.k)?;
        self.epsilon.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub key: Key,
    pub action: usize,
    pub reward: f64,
}

/// The `(key, action, reward)` sequence of one episode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeTrace {
    pub steps: Vec<TraceStep>,
}

impl EpisodeTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: Key, action: usize, reward: f64) {
        self.steps.push(TraceStep {
            key,
            action,
            reward,
        });
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }

    pub fn clear(&mut self) {
        self.steps.clear();
    }
}

/// Discounted return from every step: `R_t = r_{t+1} + lambda * R_{t+1}`,
/// computed backwards from the last reward.
pub fn episode_returns(rewards: &[f64], discount: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (t, r) in rewards.iter().enumerate().rev() {
        acc = if t + 1 == rewards.len() { *r } else { r + discount * acc };
        out[t] = acc;
    }
    out
}

/// Epsilon-greedy action during training. Greedy lookups mark the neighbours
/// they used at step `now`; when every memory is empty the action is uniform.
pub fn select_action(
    memories: &mut [ActionMemory],
    key: &Key,
    epsilon: f64,
    rng: &mut dyn RngCore,
    now: u64,
) -> Result<usize, AgentError> {
    let n = memories.len();
    if rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..n));
    }
    match lookup_best_action(memories, key, now) {
        Ok((a, _)) => Ok(a),
        Err(MemoryError::EmptyMemory) => Ok(rng.random_range(0..n)),
        Err(e) => Err(e.into()),
    }
}

/// Greedy action with no side effects on the memories.
pub fn select_greedy(
    memories: &[ActionMemory],
    key: &Key,
    rng: &mut dyn RngCore,
) -> Result<usize, AgentError> {
    match peek_best_action(memories, key) {
        Ok((a, _)) => Ok(a),
        Err(MemoryError::EmptyMemory) => Ok(rng.random_range(0..memories.len())),
        Err(e) => Err(e.into()),
    }
}

/// MFEC agent: per-action episodic memories plus an optional projection.
#[derive(Debug, Clone)]
pub struct MfecAgent {
    config: AgentConfig,
    memories: Vec<ActionMemory>,
    projection: Option<ProjectionMatrix>,
    obs_dim: usize,
}

impl MfecAgent {
    pub fn new(
        config: AgentConfig,
        obs_dim: usize,
        action_count: usize,
        seed: u64,
    ) -> Result<Self, AgentError> {
        config.validate()?;
        if action_count == 0 || obs_dim == 0 {
            return Err(AgentError::InvalidConfig(
                "need at least one action and one observation component".into(),
            ));
        }
        let projection = config
            .projection
            .map(|kd| ProjectionMatrix::new(obs_dim, kd, seed))
            .transpose()?;
        let key_dim = projection.as_ref().map_or(obs_dim, |p| p.key_dim());
        let mem_cfg = MemoryConfig {
            dim: key_dim,
            capacity: config.capacity,
            strategy: config.strategy,
            backend: config.backend,
            kernel: config.kernel,
        };
        let memories = (0..action_count)
            .map(|_| ActionMemory::new(mem_cfg))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            config,
            memories,
            projection,
            obs_dim,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn memories(&self) -> &[ActionMemory] {
        &self.memories
    }

    pub fn action_count(&self) -> usize {
        self.memories.len()
    }

    /// Map an observation to a memory key.
    pub fn key(&self, obs: &[f64]) -> Result<Key, AgentError> {
        if obs.len() != self.obs_dim {
            return Err(MemoryError::DimensionMismatch {
                expected: self.obs_dim,
                found: obs.len(),
            }
            .into());
        }
        let values = match &self.projection {
            Some(p) => p.project(obs)?,
            None => obs.to_vec(),
        };
        Ok(Key::new(values)?)
    }

    pub fn act(
        &mut self,
        key: &Key,
        epsilon: f64,
        rng: &mut dyn RngCore,
        now: u64,
    ) -> Result<usize, AgentError> {
        select_action(&mut self.memories, key, epsilon, rng, now)
    }

    pub fn act_greedy(&self, key: &Key, rng: &mut dyn RngCore) -> Result<usize, AgentError> {
        select_greedy(&self.memories, key, rng)
    }

    /// Write every step of a finished episode with its discounted return.
    pub fn commit_episode(
        &mut self,
        trace: &EpisodeTrace,
        now: u64,
    ) -> Result<Vec<InsertEffect>, AgentError> {
        let returns = episode_returns(&trace.rewards(), self.config.discount);
        let count = self.memories.len();
        let mut effects = Vec::with_capacity(trace.len());
        for (step, ret) in trace.steps.iter().zip(returns) {
            let memory = self.memories.get_mut(step.action).ok_or(EnvError::InvalidAction {
                action: step.action,
                count,
            })?;
            effects.push(memory.insert(&step.key, ret, now)?);
        }
        Ok(effects)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn returns_examples() {
        assert_eq!(episode_returns(&[1.0, 1.0, 1.0], 0.5), vec![1.75, 1.5, 1.0]);
        assert_eq!(episode_returns(&[0.0, 0.0, 1.0], 1.0), vec![1.0, 1.0, 1.0]);
        assert_eq!(episode_returns(&[3.0, -2.0, 5.0], 0.0), vec![3.0, -2.0, 5.0]);
        assert!(episode_returns(&[], 0.9).is_empty());
    }

    proptest::proptest! {
        #[test]
        fn returns_satisfy_backward_recurrence(
            rewards in proptest::collection::vec(-10.0f64..10.0, 1..60),
            lambda in 0.0f64..=1.0,
        ) {
            let r = episode_returns(&rewards, lambda);
            let n = rewards.len();
            proptest::prop_assert_eq!(r[n - 1], rewards[n - 1]);
            for t in 0..n - 1 {
                proptest::prop_assert_eq!(r[t], rewards[t] + lambda * r[t + 1]);
            }
            // forward summation agrees up to rounding
            let forward: f64 = rewards.iter().enumerate().map(|(j, x)| lambda.powi(j as i32) * x).sum();
            proptest::prop_assert!((forward - r[0]).abs() <= 1e-9 * (1.0 + forward.abs()));
        }
    }

    fn agent(action_count: usize) -> MfecAgent {
        MfecAgent::new(
            AgentConfig {
                capacity: 100,
                ..Default::default()
            },
            2,
            action_count,
            0,
        )
        .unwrap()
    }

    fn key(v: &[f64]) -> Key {
        Key::new(v.to_vec()).unwrap()
    }

    #[test]
    fn uniform_when_epsilon_is_one() {
        let mut a = agent(4);
        let mut t = EpisodeTrace::new();
        t.push(key(&[0.0, 0.0]), 2, 10.0);
        a.commit_episode(&t, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 4];
        let draws = 10_000;
        for _ in 0..draws {
            counts[a.act(&key(&[0.0, 0.0]), 1.0, &mut rng, 0).unwrap()] += 1;
        }
        let expected = draws as f64 / 4.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 3 degrees of freedom, 0.999 quantile
        assert!(chi2 < 16.27, "chi2 {chi2} counts {counts:?}");
    }

    #[test]
    fn greedy_picks_best_estimate() {
        let mut a = agent(2);
        let mut t = EpisodeTrace::new();
        t.push(key(&[0.0, 0.0]), 0, 3.0);
        a.commit_episode(&t, 0).unwrap();
        let mut t = EpisodeTrace::new();
        t.push(key(&[0.0, 0.0]), 1, 7.0);
        a.commit_episode(&t, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            assert_eq!(a.act(&key(&[0.1, 0.0]), 0.0, &mut rng, 1).unwrap(), 1);
            assert_eq!(a.act_greedy(&key(&[0.1, 0.0]), &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn empty_memories_fall_back_to_uniform() {
        let a = agent(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen = [false; 3];
        for _ in 0..300 {
            seen[a.act_greedy(&key(&[0.0, 0.0]), &mut rng).unwrap()] = true;
        }
        assert_eq!(seen, [true; 3]);
    }

    #[test]
    fn commit_writes_every_step() {
        let mut a = agent(2);
        let mut t = EpisodeTrace::new();
        t.push(key(&[0.0, 0.0]), 0, 1.0);
        let effects = a.commit_episode(&t, 0).unwrap();
        assert_eq!(effects, vec![InsertEffect::Appended(0)]);
        assert_eq!(a.memories()[0].entries()[0].q, 1.0);
        assert!(a.memories()[1].is_empty());

        let mut t = EpisodeTrace::new();
        for i in 0..5 {
            t.push(key(&[i as f64, 1.0]), i % 2, 0.0);
        }
        t.push(key(&[0.0, 0.0]), 0, 2.0);
        let effects = a.commit_episode(&t, 1).unwrap();
        assert_eq!(effects.len(), t.len());
        // revisit with a higher return raises the stored value
        assert_eq!(effects[5], InsertEffect::UpdatedExactMatch(0));
        assert_eq!(a.memories()[0].entries()[0].q, 2.0);
        assert_relative_eq!(a.memories()[0].entries()[1].q, 0.99f64.powi(5) * 2.0, max_relative = 1e-12);
    }

    #[test]
    fn projection_changes_key_size() {
        let cfg = AgentConfig {
            projection: Some(8),
            capacity: 10,
            ..Default::default()
        };
        let a = MfecAgent::new(cfg, 3, 2, 5).unwrap();
        assert_eq!(a.key(&[1.0, 2.0, 3.0]).unwrap().dim(), 8);
        assert_eq!(a.memories()[0].dim(), 8);
        assert!(a.key(&[1.0]).is_err());
    }

    #[test]
    fn config_validation() {
        let bad = [
            AgentConfig {
                discount: 1.5,
                ..Default::default()
            },
            AgentConfig {
                capacity: 0,
                ..Default::default()
            },
            AgentConfig {
                projection: Some(0),
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(MfecAgent::new(cfg, 2, 2, 0).is_err());
        }
    }
}
