//! Bounded per-action episodic memory.
//!
//! An [`ActionMemory`] stores up to `capacity` keys together with a value
//! estimate. Values are read back with an inverse-distance weighted k-NN
//! average. When the memory is full, new experience is handled by one of five
//! storage strategies: three ranking rules that pick a victim to overwrite
//! (least recently used, lowest return, lowest surprise) and two clustering
//! rules that merge the new key into its nearest entry (online k-means and
//! dynamic online k-means).

mod action_memory;
mod index;
mod kernel;
mod lookup;
#[cfg(test)]
mod properties;

use thiserror::Error;

pub use action_memory::{ActionMemory, InsertEffect, MemoryConfig};
pub use index::{Backend, Neighbor};
pub use kernel::{inverse_distance_weight, kernel_weight, squared_distance, KernelParams};
pub use lookup::{lookup_best_action, peek_best_action};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MemoryError {
    #[error("key dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("key contains a non-finite component at position {0}")]
    NonFiniteKey(usize),
    #[error("non-finite return value {0}")]
    NonFiniteReturn(f64),
    #[error("empty memory")]
    EmptyMemory,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("operation `{op}` is not defined for strategy {strategy}")]
    WrongStrategy { op: &'static str, strategy: Strategy },
}

/// A finite, fixed-dimension state embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Key(Box<[f64]>);

impl Key {
    pub fn new(values: Vec<f64>) -> Result<Self, MemoryError> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(MemoryError::NonFiniteKey(pos));
        }
        Ok(Key(values.into_boxed_slice()))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Bitwise identity, used for exact-match detection (`-0.0 != 0.0` here).
    pub fn bits_eq(&self, other: &Key) -> bool {
        self.0.len() == other.0.len()
            && self.0.iter().zip(other.0.iter()).all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub(crate) fn bit_pattern(&self) -> Box<[u64]> {
        self.0.iter().map(|v| v.to_bits()).collect()
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl TryFrom<Vec<f64>> for Key {
    type Error = MemoryError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Key::new(values)
    }
}

impl TryFrom<&[f64]> for Key {
    type Error = MemoryError;

    fn try_from(values: &[f64]) -> Result<Self, Self::Error> {
        Key::new(values.to_vec())
    }
}

/// One stored key with its value and the bookkeeping the strategies need.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryEntry {
    pub key: Key,
    /// Stored return, or the cluster's averaged value for kM/DkM.
    pub q: f64,
    /// Step at which the entry was last written or retrieved.
    pub last_used: u64,
    /// `|R - Q(s, a)|` measured when the entry was written.
    pub surprise: f64,
    /// Cluster size `n`; only meaningful for kM/DkM.
    pub count: f64,
}

impl MemoryEntry {
    pub fn new(key: Key, q: f64, now: u64) -> Self {
        Self {
            key,
            q,
            last_used: now,
            surprise: f64::INFINITY,
            count: 1.0,
        }
    }
}

/// Storage strategy applied once a memory is full.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Replace the least recently used entry.
    Lru,
    /// Replace the entry with the lowest stored return.
    Rew,
    /// Replace the entry with the lowest surprise.
    Sur,
    /// Online k-means: merge into the nearest cluster.
    Km,
    /// Dynamic online k-means: kM with a global `1/N` count decay and
    /// replacement of clusters whose count reaches zero.
    Dkm,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Lru,
        Strategy::Rew,
        Strategy::Sur,
        Strategy::Km,
        Strategy::Dkm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Lru => "lru",
            Strategy::Rew => "rew",
            Strategy::Sur => "sur",
            Strategy::Km => "km",
            Strategy::Dkm => "dkm",
        }
    }

    pub fn is_clustering(self) -> bool {
        matches!(self, Strategy::Km | Strategy::Dkm)
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown strategy `{s}` (expected lru, rew, sur, km or dkm)"))
    }
}
