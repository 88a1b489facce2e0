use std::f64::consts::PI;

use rand::{Rng, RngCore};

use super::{EnvError, Environment, StepResult};

pub const DT: f64 = 0.2;
pub const LINK_LENGTH_1: f64 = 1.0;
pub const LINK_MASS_1: f64 = 1.0;
pub const LINK_MASS_2: f64 = 1.0;
pub const LINK_COM_POS_1: f64 = 0.5;
pub const LINK_COM_POS_2: f64 = 0.5;
pub const LINK_MOI: f64 = 1.0;
pub const GRAVITY: f64 = 9.8;
pub const MAX_VEL_1: f64 = 4.0 * PI;
pub const MAX_VEL_2: f64 = 9.0 * PI;
pub const TORQUES: [f64; 3] = [-1.0, 0.0, 1.0];
pub const MAX_STEPS: usize = 500;

/// Joint angles and angular velocities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AcrobotState {
    pub theta1: f64,
    pub theta2: f64,
    pub dtheta1: f64,
    pub dtheta2: f64,
}

type Vec4 = [f64; 4];

/// Equations of motion (the "book" variant of the two-link underactuated arm).
fn derivatives(s: Vec4, torque: f64) -> Vec4 {
    let (m1, m2) = (LINK_MASS_1, LINK_MASS_2);
    let l1 = LINK_LENGTH_1;
    let (lc1, lc2) = (LINK_COM_POS_1, LINK_COM_POS_2);
    let (i1, i2) = (LINK_MOI, LINK_MOI);
    let g = GRAVITY;
    let [theta1, theta2, dtheta1, dtheta2] = s;

    let d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * theta2.cos()) + i1 + i2;
    let d2 = m2 * (lc2 * lc2 + l1 * lc2 * theta2.cos()) + i2;
    // cos(a - pi/2) written as sin(a) so the hanging rest state is an exact fixed point
    let phi2 = m2 * lc2 * g * (theta1 + theta2).sin();
    let phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * theta2.sin()
        - 2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * theta2.sin()
        + (m1 * lc1 + m2 * l1) * g * theta1.sin()
        + phi2;
    let ddtheta2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * theta2.sin() - phi2)
        / (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
    let ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    [dtheta1, dtheta2, ddtheta1, ddtheta2]
}

fn rk4_step(s: Vec4, torque: f64, h: f64) -> Vec4 {
    let add = |a: Vec4, b: Vec4, scale: f64| -> Vec4 {
        [
            a[0] + scale * b[0],
            a[1] + scale * b[1],
            a[2] + scale * b[2],
            a[3] + scale * b[3],
        ]
    };
    let k1 = derivatives(s, torque);
    let k2 = derivatives(add(s, k1, h / 2.0), torque);
    let k3 = derivatives(add(s, k2, h / 2.0), torque);
    let k4 = derivatives(add(s, k3, h), torque);
    let mut out = s;
    for i in 0..4 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn wrap_angle(mut x: f64) -> f64 {
    while x > PI {
        x -= 2.0 * PI;
    }
    while x < -PI {
        x += 2.0 * PI;
    }
    x
}

impl AcrobotState {
    pub fn observation(&self) -> Vec<f64> {
        vec![
            self.theta1.cos(),
            self.theta1.sin(),
            self.theta2.cos(),
            self.theta2.sin(),
            self.dtheta1,
            self.dtheta2,
        ]
    }

    /// Integrate one control interval with the torque for `action`.
    pub fn advance(self, action: usize) -> AcrobotState {
        let torque = TORQUES[action];
        let [t1, t2, d1, d2] = rk4_step(
            [self.theta1, self.theta2, self.dtheta1, self.dtheta2],
            torque,
            DT,
        );
        AcrobotState {
            theta1: wrap_angle(t1),
            theta2: wrap_angle(t2),
            dtheta1: d1.clamp(-MAX_VEL_1, MAX_VEL_1),
            dtheta2: d2.clamp(-MAX_VEL_2, MAX_VEL_2),
        }
    }

    /// The free end is above the bar by more than one link length.
    pub fn reached_goal(&self) -> bool {
        -self.theta1.cos() - (self.theta1 + self.theta2).cos() > 1.0
    }
}

/// Swing-up of a two-link arm actuated at the elbow; -1 reward per step.
#[derive(Debug, Clone, Default)]
pub struct Acrobot {
    state: AcrobotState,
    steps: usize,
    finished: bool,
}

impl Acrobot {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self) -> AcrobotState {
        self.state
    }

    pub fn set_state(&mut self, state: AcrobotState) {
        self.state = state;
        self.steps = 0;
        self.finished = false;
    }
}

impl Environment for Acrobot {
    fn name(&self) -> &'static str {
        "acrobot"
    }

    fn observation_dim(&self) -> usize {
        6
    }

    fn action_count(&self) -> usize {
        3
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        let mut draw = || rng.random_range(-0.1..=0.1);
        let state = AcrobotState {
            theta1: draw(),
            theta2: draw(),
            dtheta1: draw(),
            dtheta2: draw(),
        };
        self.set_state(state);
        state.observation()
    }

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        if action >= 3 {
            return Err(EnvError::InvalidAction { action, count: 3 });
        }
        if self.finished {
            return Err(EnvError::EpisodeOver);
        }
        self.state = self.state.advance(action);
        self.steps += 1;
        let done = self.state.reached_goal();
        let truncated = !done && self.steps >= MAX_STEPS;
        self.finished = done || truncated;
        Ok(StepResult {
            observation: self.state.observation(),
            reward: -1.0,
            done,
            truncated,
        })
    }
}
