use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::AgentError;

/// Fixed Gaussian random projection from observation space to key space.
///
/// Entries are i.i.d. `N(0, 1) / sqrt(key_dim)`, so squared norms are
/// preserved in expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    rows: usize,
    cols: usize,
    /// Row-major, `rows * cols`.
    data: Vec<f64>,
}

impl ProjectionMatrix {
    pub fn new(obs_dim: usize, key_dim: usize, seed: u64) -> Result<Self, AgentError> {
        if obs_dim == 0 || key_dim == 0 {
            return Err(AgentError::InvalidConfig(format!(
                "projection dimensions must be positive (obs {obs_dim}, key {key_dim})"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (key_dim as f64).sqrt();
        let data = (0..obs_dim * key_dim)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                g * scale
            })
            .collect();
        Ok(Self {
            rows: key_dim,
            cols: obs_dim,
            data,
        })
    }

    pub fn key_dim(&self) -> usize {
        self.rows
    }

    pub fn obs_dim(&self) -> usize {
        self.cols
    }

    pub fn project(&self, obs: &[f64]) -> Result<Vec<f64>, AgentError> {
        if obs.len() != self.cols {
            return Err(AgentError::InvalidConfig(format!(
                "observation has {} components, projection expects {}",
                obs.len(),
                self.cols
            )));
        }
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(obs).map(|(a, b)| a * b).sum())
            .collect())
    }
}
