use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::EnvError;

/// Two-phase drifting 2D stream: a shuffled uniform lattice followed by
/// axis-aligned skew-normal samples.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub grid_min: [f64; 2],
    pub grid_max: [f64; 2],
    pub points_per_axis: usize,
    /// Skew-normal location `xi` per axis.
    pub location: [f64; 2],
    /// Skew-normal scale `omega` per axis.
    pub scale: [f64; 2],
    /// Skew-normal shape `alpha` per axis.
    pub shape: [f64; 2],
    pub samples: usize,
    pub seed: u64,
}

impl Default for StreamSpec {
    fn default() -> Self {
        Self {
            grid_min: [0.0, 0.0],
            grid_max: [1.0, 1.0],
            points_per_axis: 20,
            location: [0.75, 0.75],
            scale: [0.12, 0.12],
            shape: [4.0, 4.0],
            samples: 400,
            seed: 0,
        }
    }
}

impl StreamSpec {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.points_per_axis == 0 || self.samples == 0 {
            return Err(EnvError::InvalidDefinition(
                "stream phases need at least one point each".into(),
            ));
        }
        if self.scale.iter().any(|w| !(*w > 0.0)) {
            return Err(EnvError::InvalidDefinition(
                "skew-normal scale must be positive".into(),
            ));
        }
        if (0..2).any(|d| !(self.grid_max[d] >= self.grid_min[d])) {
            return Err(EnvError::InvalidDefinition("grid max below grid min".into()));
        }
        Ok(())
    }

    /// Number of lattice points emitted before the skew-normal phase.
    pub fn phase1_len(&self) -> usize {
        self.points_per_axis * self.points_per_axis
    }

    pub fn len(&self) -> usize {
        self.phase1_len() + self.samples
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lattice_coord(&self, axis: usize, i: usize) -> f64 {
        let n = self.points_per_axis;
        if n == 1 {
            return self.grid_min[axis];
        }
        let (lo, hi) = (self.grid_min[axis], self.grid_max[axis]);
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

/// Mean of a skew-normal with location `xi`, scale `omega` and shape `alpha`.
pub fn skew_normal_mean(xi: f64, omega: f64, alpha: f64) -> f64 {
    let delta = alpha / (1.0 + alpha * alpha).sqrt();
    xi + omega * delta * (2.0 / std::f64::consts::PI).sqrt()
}

pub fn synthetic_stream(spec: &StreamSpec) -> Result<Vec<[f64; 2]>, EnvError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.points_per_axis;
    let mut points: Vec<[f64; 2]> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| [spec.lattice_coord(0, i), spec.lattice_coord(1, j)])
        .collect();
    points.shuffle(&mut rng);

    let deltas = spec.shape.map(|a| a / (1.0 + a * a).sqrt());
    for _ in 0..spec.samples {
        let mut p = [0.0; 2];
        for d in 0..2 {
            // Z = delta |U0| + sqrt(1 - delta^2) U1 is standard skew-normal
            let u0: f64 = StandardNormal.sample(&mut rng);
            let u1: f64 = StandardNormal.sample(&mut rng);
            let z = deltas[d] * u0.abs() + (1.0 - deltas[d] * deltas[d]).sqrt() * u1;
            p[d] = spec.location[d] + spec.scale[d] * z;
        }
        points.push(p);
    }
    Ok(points)
}
