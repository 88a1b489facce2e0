use rand::{Rng, RngCore};

use super::{EnvError, Environment, StepResult};

pub const GRAVITY: f64 = 9.8;
pub const CART_MASS: f64 = 1.0;
pub const POLE_MASS: f64 = 0.1;
/// Half the pole length.
pub const POLE_HALF_LENGTH: f64 = 0.5;
pub const FORCE_MAG: f64 = 10.0;
pub const TAU: f64 = 0.02;
pub const X_THRESHOLD: f64 = 2.4;
pub const THETA_THRESHOLD: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
pub const MAX_STEPS: usize = 500;

/// `(x, x_dot, theta, theta_dot)`
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl CartPoleState {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.x, self.x_dot, self.theta, self.theta_dot]
    }

    /// One explicit Euler step under `action` (0 pushes left, 1 pushes right).
    pub fn advance(self, action: usize) -> CartPoleState {
        let force = if action == 1 { FORCE_MAG } else { -FORCE_MAG };
        let total_mass = CART_MASS + POLE_MASS;
        let polemass_length = POLE_MASS * POLE_HALF_LENGTH;
        let (sin_t, cos_t) = self.theta.sin_cos();
        let temp = (force + polemass_length * self.theta_dot * self.theta_dot * sin_t) / total_mass;
        let theta_acc = (GRAVITY * sin_t - cos_t * temp)
            / (POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos_t * cos_t / total_mass));
        let x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;
        CartPoleState {
            x: self.x + TAU * self.x_dot,
            x_dot: self.x_dot + TAU * x_acc,
            theta: self.theta + TAU * self.theta_dot,
            theta_dot: self.theta_dot + TAU * theta_acc,
        }
    }

    pub fn is_failed(&self) -> bool {
        self.x.abs() > X_THRESHOLD || self.theta.abs() > THETA_THRESHOLD
    }
}

/// Pole balancing on a cart, two actions, +1 reward per step.
#[derive(Debug, Clone, Default)]
pub struct CartPole {
    state: CartPoleState,
    steps: usize,
    finished: bool,
}

impl CartPole {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self) -> CartPoleState {
        self.state
    }

    pub fn set_state(&mut self, state: CartPoleState) {
        self.state = state;
        self.steps = 0;
        self.finished = false;
    }
}

impl Environment for CartPole {
    fn name(&self) -> &'static str {
        "cartpole"
    }

    fn observation_dim(&self) -> usize {
        4
    }

    fn action_count(&self) -> usize {
        2
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        let mut draw = || rng.random_range(-0.05..=0.05);
        let state = CartPoleState {
            x: draw(),
            x_dot: draw(),
            theta: draw(),
            theta_dot: draw(),
        };
        self.set_state(state);
        state.to_vec()
    }

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        if action >= 2 {
            return Err(EnvError::InvalidAction { action, count: 2 });
        }
        if self.finished {
            return Err(EnvError::EpisodeOver);
        }
        self.state = self.state.advance(action);
        self.steps += 1;
        let done = self.state.is_failed();
        let truncated = !done && self.steps >= MAX_STEPS;
        self.finished = done || truncated;
        Ok(StepResult {
            observation: self.state.to_vec(),
            reward: 1.0,
            done,
            truncated,
        })
    }
}
