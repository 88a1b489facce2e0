use super::{Key, MemoryError};

/// Kernel regularizer and neighbour count used for value estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub delta: f64,
    pub k: usize,
}

impl KernelParams {
    pub fn new(delta: f64, k: usize) -> Result<Self, MemoryError> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(MemoryError::InvalidParameter(format!(
                "kernel delta must be positive and finite, got {delta}"
            )));
        }
        if k == 0 {
            return Err(MemoryError::InvalidParameter(
                "neighbour count k must be at least 1".into(),
            ));
        }
        Ok(Self { delta, k })
    }
}

impl Default for KernelParams {
    fn default() -> Self {
        Self { delta: 1e-3, k: 11 }
    }
}

/// Squared Euclidean distance. Every index backend goes through this function
/// so that distances (and therefore tie-breaks) agree bit for bit.
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Inverse-distance weight for a precomputed squared distance.
#[inline]
pub fn inverse_distance_weight(dist2: f64, delta: f64) -> f64 {
    1.0 / (dist2 + delta)
}

/// `1 / (‖query − neighbor‖² + delta)`.
pub fn kernel_weight(query: &Key, neighbor: &Key, delta: f64) -> Result<f64, MemoryError> {
    if query.dim() != neighbor.dim() {
        return Err(MemoryError::DimensionMismatch {
            expected: query.dim(),
            found: neighbor.dim(),
        });
    }
    if !(delta > 0.0) {
        return Err(MemoryError::InvalidParameter(format!(
            "kernel delta must be positive, got {delta}"
        )));
    }
    Ok(inverse_distance_weight(
        squared_distance(query.as_slice(), neighbor.as_slice()),
        delta,
    ))
}
