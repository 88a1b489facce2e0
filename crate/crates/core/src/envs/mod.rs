//! Small deterministic control tasks and the synthetic drifting 2D stream.

mod acrobot;
mod cartpole;
mod grid;
mod stream;

use rand::RngCore;
use thiserror::Error;

pub use acrobot::{Acrobot, AcrobotState};
pub use cartpole::{CartPole, CartPoleState};
pub use grid::{Cell, GridAction, GridLayout, GridWorld};
pub use stream::{skew_normal_mean, synthetic_stream, StreamSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid action {action} (environment has {count} actions)")]
    InvalidAction { action: usize, count: usize },
    #[error("step called on a finished episode; call reset first")]
    EpisodeOver,
    #[error("invalid environment definition: {0}")]
    InvalidDefinition(String),
    #[error("unknown environment `{0}` (expected cartpole, acrobot, openroom or fourroom)")]
    UnknownEnvironment(String),
}

/// Outcome of one environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    /// The task reached a terminal state.
    pub done: bool,
    /// The episode hit the step cap without terminating.
    pub truncated: bool,
}

impl StepResult {
    pub fn is_last(&self) -> bool {
        self.done || self.truncated
    }
}

/// Episodic environment with a discrete action set.
pub trait Environment {
    fn name(&self) -> &'static str;
    fn observation_dim(&self) -> usize;
    fn action_count(&self) -> usize;
    /// Start a new episode and return the first observation.
    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64>;
    fn step(&mut self, action: usize) -> Result<StepResult, EnvError>;
}

/// Named environment, used by configs and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnvKind {
    CartPole,
    Acrobot,
    OpenRoom,
    FourRoom,
}

impl EnvKind {
    pub const ALL: [EnvKind; 4] = [
        EnvKind::CartPole,
        EnvKind::Acrobot,
        EnvKind::OpenRoom,
        EnvKind::FourRoom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::CartPole => "cartpole",
            EnvKind::Acrobot => "acrobot",
            EnvKind::OpenRoom => "openroom",
            EnvKind::FourRoom => "fourroom",
        }
    }

    pub fn make(self) -> Box<dyn Environment + Send> {
        match self {
            EnvKind::CartPole => Box::new(CartPole::new()),
            EnvKind::Acrobot => Box::new(Acrobot::new()),
            EnvKind::OpenRoom => Box::new(GridWorld::new(GridLayout::open_room(), "openroom")),
            EnvKind::FourRoom => Box::new(GridWorld::new(GridLayout::four_room(), "fourroom")),
        }
    }
}

impl std::fmt::Display for EnvKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EnvKind {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EnvKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| EnvError::UnknownEnvironment(s.to_string()))
    }
}
