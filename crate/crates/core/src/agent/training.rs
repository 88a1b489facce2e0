use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AgentError, EpisodeTrace, MfecAgent};
use crate::envs::Environment;

/// Step budget and evaluation cadence for one training run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingPlan {
    pub total_steps: u64,
    pub eval_interval: u64,
    pub eval_episodes: usize,
}

impl TrainingPlan {
    pub fn validate(&self) -> Result<(), AgentError> {
        if self.total_steps == 0 || self.eval_interval == 0 || self.eval_episodes == 0 {
            return Err(AgentError::InvalidConfig(format!(
                "training plan needs positive steps, interval and episodes: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn eval_count(&self) -> u64 {
        self.total_steps / self.eval_interval
    }
}

/// Mean greedy-evaluation reward after `step` training steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub step: u64,
    pub mean_reward: f64,
}

/// Mean total reward of `episodes` greedy episodes. Memories are read only.
pub fn evaluate(
    agent: &MfecAgent,
    env: &mut dyn Environment,
    episodes: usize,
    rng: &mut dyn RngCore,
) -> Result<f64, AgentError> {
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut obs = env.reset(rng);
        loop {
            let key = agent.key(&obs)?;
            let action = agent.act_greedy(&key, rng)?;
            let result = env.step(action)?;
            total += result.reward;
            if result.is_last() {
                break;
            }
            obs = result.observation;
        }
    }
    Ok(total / episodes as f64)
}

/// Train for `plan.total_steps` environment steps, evaluating every
/// `plan.eval_interval` steps on a fresh environment.
pub fn run_training(
    agent: &mut MfecAgent,
    make_env: &dyn Fn() -> Box<dyn Environment + Send>,
    plan: TrainingPlan,
    seed: u64,
) -> Result<Vec<EvalPoint>, AgentError> {
    run_training_observed(agent, make_env, plan, seed, &mut |_| {})
}

/// [`run_training`] that hands every committed episode to `on_commit`.
pub fn run_training_observed(
    agent: &mut MfecAgent,
    make_env: &dyn Fn() -> Box<dyn Environment + Send>,
    plan: TrainingPlan,
    seed: u64,
    on_commit: &mut dyn FnMut(&EpisodeTrace),
) -> Result<Vec<EvalPoint>, AgentError> {
    plan.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = make_env();
    if env.action_count() != agent.action_count() {
        return Err(AgentError::InvalidConfig(format!(
            "agent has {} actions, environment {} has {}",
            agent.action_count(),
            env.name(),
            env.action_count()
        )));
    }
    let schedule = agent.config().epsilon;
    let mut records = Vec::with_capacity(plan.eval_count() as usize);
    let mut trace = EpisodeTrace::new();
    let mut obs = env.reset(&mut rng);

    for t in 0..plan.total_steps {
        let key = agent.key(&obs)?;
        let action = agent.act(&key, schedule.value_at(t), &mut rng, t)?;
        let result = env.step(action)?;
        trace.push(key, action, result.reward);
        if result.is_last() {
            // step-capped episodes are committed as if terminal
            agent.commit_episode(&trace, t)?;
            on_commit(&trace);
            trace.clear();
            obs = env.reset(&mut rng);
        } else {
            obs = result.observation;
        }

        if (t + 1) % plan.eval_interval == 0 {
            let eval_index = (t + 1) / plan.eval_interval;
            let mut eval_rng = ChaCha8Rng::seed_from_u64(seed);
            eval_rng.set_stream(eval_index);
            let mut eval_env = make_env();
            let mean_reward = evaluate(agent, eval_env.as_mut(), plan.eval_episodes, &mut eval_rng)?;
            records.push(EvalPoint {
                step: t + 1,
                mean_reward,
            });
        }
    }
    Ok(records)
}
