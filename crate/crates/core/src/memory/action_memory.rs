use std::collections::HashMap;

use super::index::{naive_knn, Backend, Neighbor, SpatialIndex};
use super::kernel::{inverse_distance_weight, KernelParams};
use super::{Key, MemoryEntry, MemoryError, Strategy};

/// Construction parameters for an [`ActionMemory`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryConfig {
    pub dim: usize,
    pub capacity: usize,
    pub strategy: Strategy,
    pub backend: Backend,
    pub kernel: KernelParams,
}

/// What an [`ActionMemory::insert`] did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertEffect {
    /// A new entry was appended at this index.
    Appended(usize),
    /// A bitwise-identical key was already stored; its value took the max.
    UpdatedExactMatch(usize),
    /// The entry at this index was overwritten (ranked victim or dead DkM cluster).
    Replaced(usize),
    /// The key was merged into the cluster at this index.
    Merged(usize),
}

impl InsertEffect {
    pub fn index(self) -> usize {
        match self {
            InsertEffect::Appended(i)
            | InsertEffect::UpdatedExactMatch(i)
            | InsertEffect::Replaced(i)
            | InsertEffect::Merged(i) => i,
        }
    }
}

/// Bounded episodic table for a single action.
#[derive(Debug, Clone)]
pub struct ActionMemory {
    config: MemoryConfig,
    entries: Vec<MemoryEntry>,
    /// Bit pattern of each stored key -> entry index.
    exact: HashMap<Box<[u64]>, usize>,
    index: SpatialIndex,
    /// Per-insert decrement applied to every cluster count (DkM only).
    cluster_decay: f64,
}

impl ActionMemory {
    pub fn new(config: MemoryConfig) -> Result<Self, MemoryError> {
        if config.dim == 0 {
            return Err(MemoryError::InvalidParameter(
                "key dimension must be at least 1".into(),
            ));
        }
        if config.capacity == 0 {
            return Err(MemoryError::InvalidParameter(
                "memory capacity must be at least 1".into(),
            ));
        }
        KernelParams::new(config.kernel.delta, config.kernel.k)?;
        Ok(Self {
            config,
            entries: Vec::with_capacity(config.capacity.min(1 << 16)),
            exact: HashMap::new(),
            index: SpatialIndex::default(),
            cluster_decay: 1.0 / config.capacity as f64,
        })
    }

    /// Override the DkM count decay (default `1/capacity`). With a decay of
    /// zero DkM degenerates to plain online k-means.
    pub fn with_cluster_decay(mut self, decay: f64) -> Self {
        self.cluster_decay = decay;
        self
    }

    pub fn config(&self) -> &MemoryConfig {
        &self.config
    }

    pub fn strategy(&self) -> Strategy {
        self.config.strategy
    }

    pub fn capacity(&self) -> usize {
        self.config.capacity
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.config.capacity
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    /// Index of the entry whose key is bitwise identical to `key`, if any.
    pub fn find_exact(&self, key: &Key) -> Option<usize> {
        self.exact
            .get(&key.bit_pattern())
            .copied()
            .filter(|&i| self.entries[i].key.bits_eq(key))
    }

    fn check_dim(&self, key: &Key) -> Result<(), MemoryError> {
        if key.dim() != self.config.dim {
            return Err(MemoryError::DimensionMismatch {
                expected: self.config.dim,
                found: key.dim(),
            });
        }
        Ok(())
    }

    /// The `min(k, len)` nearest entries in ascending `(distance, index)` order.
    pub fn knn(&self, query: &Key, k: usize) -> Result<Vec<Neighbor>, MemoryError> {
        self.check_dim(query)?;
        if self.entries.is_empty() {
            return Err(MemoryError::EmptyMemory);
        }
        if k == 0 {
            return Err(MemoryError::InvalidParameter("k must be at least 1".into()));
        }
        Ok(self.knn_unchecked(query.as_slice(), k))
    }

    fn knn_unchecked(&self, query: &[f64], k: usize) -> Vec<Neighbor> {
        match self.config.backend {
            Backend::NaiveScan => naive_knn(&self.entries, query, k),
            Backend::SpatialTree => self.index.knn(&self.entries, query, k),
        }
    }

    fn weighted_average(&self, neighbors: &[Neighbor]) -> f64 {
        let delta = self.config.kernel.delta;
        let (mut num, mut den) = (0.0, 0.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for n in neighbors {
            let q = self.entries[n.index].q;
            let w = inverse_distance_weight(n.dist2, delta);
            num += w * q;
            den += w;
            lo = lo.min(q);
            hi = hi.max(q);
        }
        // rounding can push the ratio an ulp outside the neighbour range
        (num / den).clamp(lo, hi)
    }

    /// Kernel-weighted k-NN value estimate without side effects.
    pub fn estimate(&self, query: &Key) -> Result<f64, MemoryError> {
        let neighbors = self.knn(query, self.config.kernel.k)?;
        Ok(self.weighted_average(&neighbors))
    }

    /// Value estimate that also marks every participating neighbour as used
    /// at step `now`.
    pub fn q_estimate(&mut self, query: &Key, now: u64) -> Result<f64, MemoryError> {
        let neighbors = self.knn(query, self.config.kernel.k)?;
        let value = self.weighted_average(&neighbors);
        for n in &neighbors {
            let e = &mut self.entries[n.index];
            e.last_used = e.last_used.max(now);
        }
        Ok(value)
    }

    fn surprise_of(&self, key: &Key, ret: f64) -> f64 {
        if self.entries.is_empty() {
            f64::INFINITY
        } else {
            let neighbors = self.knn_unchecked(key.as_slice(), self.config.kernel.k);
            (ret - self.weighted_average(&neighbors)).abs()
        }
    }

    /// Write a `(key, return)` pair observed at step `now`.
    pub fn insert(&mut self, key: &Key, ret: f64, now: u64) -> Result<InsertEffect, MemoryError> {
        self.check_dim(key)?;
        if !ret.is_finite() {
            return Err(MemoryError::NonFiniteReturn(ret));
        }
        let strategy = self.config.strategy;
        // clustering strategies only use the max rule while filling up
        if !strategy.is_clustering() || !self.is_full() {
            if let Some(i) = self.find_exact(key) {
                let e = &mut self.entries[i];
                e.surprise = (ret - e.q).abs();
                e.q = e.q.max(ret);
                e.last_used = e.last_used.max(now);
                return Ok(InsertEffect::UpdatedExactMatch(i));
            }
        }
        let effect = if !self.is_full() {
            let surprise = self.surprise_of(key, ret);
            let i = self.entries.len();
            self.entries.push(MemoryEntry {
                surprise,
                ..MemoryEntry::new(key.clone(), ret, now)
            });
            self.exact.entry(key.bit_pattern()).or_insert(i);
            self.index.mark_changed(i);
            InsertEffect::Appended(i)
        } else {
            match strategy {
                Strategy::Lru | Strategy::Rew | Strategy::Sur => {
                    let victim = self.select_victim()?;
                    self.replace(victim, key, ret, now);
                    InsertEffect::Replaced(victim)
                }
                Strategy::Km => {
                    let i = self.nearest(key);
                    self.merge_into(i, key, ret, now);
                    InsertEffect::Merged(i)
                }
                Strategy::Dkm => self.dkm_insert(key, ret, now),
            }
        };
        if self.config.backend == Backend::SpatialTree {
            self.index.maintain(&self.entries, self.config.dim);
        }
        Ok(effect)
    }

    /// Entry a ranking strategy would overwrite next. Ties go to the lowest index.
    pub fn select_victim(&self) -> Result<usize, MemoryError> {
        if self.entries.is_empty() {
            return Err(MemoryError::EmptyMemory);
        }
        let score: fn(&MemoryEntry) -> f64 = match self.config.strategy {
            Strategy::Lru => |e| e.last_used as f64,
            Strategy::Rew => |e| e.q,
            Strategy::Sur => |e| e.surprise,
            s @ (Strategy::Km | Strategy::Dkm) => {
                return Err(MemoryError::WrongStrategy {
                    op: "select_victim",
                    strategy: s,
                })
            }
        };
        if self.config.strategy == Strategy::Lru {
            // exact integer comparison, no float round-trip
            return Ok(argmin_by(&self.entries, |a, b| a.last_used.cmp(&b.last_used)));
        }
        Ok(argmin_by(&self.entries, |a, b| score(a).total_cmp(&score(b))))
    }

    fn nearest(&self, key: &Key) -> usize {
        self.knn_unchecked(key.as_slice(), 1)[0].index
    }

    fn replace(&mut self, victim: usize, key: &Key, ret: f64, now: u64) {
        let surprise = self.surprise_of(key, ret);
        let old = std::mem::replace(
            &mut self.entries[victim],
            MemoryEntry {
                surprise,
                ..MemoryEntry::new(key.clone(), ret, now)
            },
        );
        self.rekey(victim, &old.key);
    }

    /// Online k-means update of cluster `i` towards `(key, ret)`.
    fn merge_into(&mut self, i: usize, key: &Key, ret: f64, now: u64) {
        let old_key = self.entries[i].key.clone();
        let e = &mut self.entries[i];
        let n = e.count;
        for (c, s) in e.key.as_mut_slice().iter_mut().zip(key.as_slice()) {
            *c = (n * *c + s) / (n + 1.0);
        }
        e.q = (n * e.q + ret) / (n + 1.0);
        e.count = n + 1.0;
        e.last_used = e.last_used.max(now);
        if !e.key.bits_eq(&old_key) {
            self.rekey(i, &old_key);
        }
    }

    /// Dynamic online k-means. A cluster whose count dropped to zero or below
    /// is overwritten by the new key; otherwise the key is merged into its
    /// nearest cluster and every count decays by `1/N`.
    fn dkm_insert(&mut self, key: &Key, ret: f64, now: u64) -> InsertEffect {
        let dead = argmin_by(&self.entries, |a, b| a.count.total_cmp(&b.count));
        if self.entries[dead].count <= 0.0 {
            self.replace(dead, key, ret, now);
            return InsertEffect::Replaced(dead);
        }
        let i = self.nearest(key);
        self.merge_into(i, key, ret, now);
        let decay = self.cluster_decay;
        if decay != 0.0 {
            for e in &mut self.entries {
                e.count -= decay;
            }
        }
        InsertEffect::Merged(i)
    }

    /// Refresh the exact-match map and the spatial index after the key of
    /// entry `i` changed from `old`.
    fn rekey(&mut self, i: usize, old: &Key) {
        let old_bits = old.bit_pattern();
        if self.exact.get(&old_bits) == Some(&i) {
            self.exact.remove(&old_bits);
        }
        self.exact
            .entry(self.entries[i].key.bit_pattern())
            .or_insert(i);
        self.index.mark_changed(i);
    }
}

fn argmin_by<F>(entries: &[MemoryEntry], mut cmp: F) -> usize
where
    F: FnMut(&MemoryEntry, &MemoryEntry) -> std::cmp::Ordering,
{
    let mut best = 0;
    for i in 1..entries.len() {
        if cmp(&entries[i], &entries[best]) == std::cmp::Ordering::Less {
            best = i;
        }
    }
    best
}
