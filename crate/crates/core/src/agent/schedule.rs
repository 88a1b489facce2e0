use super::AgentError;

/// Linear epsilon annealing between two step counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub initial: f64,
    pub final_value: f64,
    pub anneal_start: u64,
    pub anneal_end: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            initial: 1.0,
            final_value: 5e-3,
            anneal_start: 5_000,
            anneal_end: 25_000,
        }
    }
}

impl EpsilonSchedule {
    pub fn new(
        initial: f64,
        final_value: f64,
        anneal_start: u64,
        anneal_end: u64,
    ) -> Result<Self, AgentError> {
        let s = Self {
            initial,
            final_value,
            anneal_start,
            anneal_end,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if !(0.0 <= self.final_value && self.final_value <= self.initial && self.initial <= 1.0) {
            return Err(AgentError::InvalidConfig(format!(
                "epsilon must satisfy 0 <= final ({}) <= initial ({}) <= 1",
                self.final_value, self.initial
            )));
        }
        if self.anneal_start > self.anneal_end {
            return Err(AgentError::InvalidConfig(format!(
                "epsilon anneal start {} is after anneal end {}",
                self.anneal_start, self.anneal_end
            )));
        }
        Ok(())
    }

    /// Constant schedule, handy for evaluation and tests.
    pub fn constant(epsilon: f64) -> Self {
        Self {
            initial: epsilon,
            final_value: epsilon,
            anneal_start: 0,
            anneal_end: 0,
        }
    }

    pub fn value_at(&self, t: u64) -> f64 {
        if t <= self.anneal_start {
            self.initial
        } else if t >= self.anneal_end {
            self.final_value
        } else {
            let frac = (t - self.anneal_start) as f64 / (self.anneal_end - self.anneal_start) as f64;
            self.initial + frac * (self.final_value - self.initial)
        }
    }
}
