//! Randomised checks of the memory invariants across all strategies.

use proptest::prelude::*;
use proptest::strategy::Strategy as _;

use super::*;
use super::Strategy;

fn config(dim: usize, capacity: usize, strategy: Strategy, backend: Backend) -> MemoryConfig {
    MemoryConfig {
        dim,
        capacity,
        strategy,
        backend,
        kernel: KernelParams::default(),
    }
}

fn any_strategy() -> impl proptest::strategy::Strategy<Value = Strategy> {
    prop::sample::select(Strategy::ALL.to_vec())
}

/// Insert sequences over a coarse lattice, so exact matches and distance ties
/// are common.
fn ops(dim: usize, max_len: usize) -> impl proptest::strategy::Strategy<Value = Vec<(Vec<f64>, f64)>> {
    prop::collection::vec(
        (prop::collection::vec(-4i32..=4, dim), -20i32..=20),
        1..max_len,
    )
    .prop_map(|v| {
        v.into_iter()
            .map(|(k, r)| (k.into_iter().map(|x| x as f64 * 0.5).collect(), r as f64 * 0.25))
            .collect()
    })
}

fn key(v: &[f64]) -> Key {
    Key::new(v.to_vec()).unwrap()
}

fn total_count(m: &ActionMemory) -> f64 {
    m.entries().iter().map(|e| e.count).sum()
}

proptest! {
    #[test]
    fn size_never_exceeds_capacity(
        strategy in any_strategy(),
        cap in 1usize..12,
        seq in ops(2, 80),
    ) {
        let mut m = ActionMemory::new(config(2, cap, strategy, Backend::SpatialTree)).unwrap();
        for (t, (k, r)) in seq.iter().enumerate() {
            m.insert(&key(k), *r, t as u64).unwrap();
            prop_assert!(m.len() <= cap);
        }
    }

    #[test]
    fn estimate_within_neighbour_range(
        strategy in any_strategy(),
        cap in 1usize..30,
        seq in ops(3, 60),
        query in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let mut m = ActionMemory::new(config(3, cap, strategy, Backend::SpatialTree)).unwrap();
        for (t, (k, r)) in seq.iter().enumerate() {
            m.insert(&key(k), *r, t as u64).unwrap();
        }
        let q = key(&query);
        let nb = m.knn(&q, m.config().kernel.k).unwrap();
        let lo = nb.iter().map(|n| m.entries()[n.index].q).fold(f64::INFINITY, f64::min);
        let hi = nb.iter().map(|n| m.entries()[n.index].q).fold(f64::NEG_INFINITY, f64::max);
        let est = m.q_estimate(&q, 1_000).unwrap();
        prop_assert!(lo <= est && est <= hi, "{lo} <= {est} <= {hi}");
    }

    #[test]
    fn backends_build_identical_memories(
        strategy in any_strategy(),
        cap in 1usize..40,
        seq in ops(2, 120),
    ) {
        let mut a = ActionMemory::new(config(2, cap, strategy, Backend::SpatialTree)).unwrap();
        let mut b = ActionMemory::new(config(2, cap, strategy, Backend::NaiveScan)).unwrap();
        for (t, (k, r)) in seq.iter().enumerate() {
            let t = t as u64;
            prop_assert_eq!(a.insert(&key(k), *r, t).unwrap(), b.insert(&key(k), *r, t).unwrap());
            if t % 7 == 0 {
                prop_assert_eq!(a.q_estimate(&key(k), t).unwrap(), b.q_estimate(&key(k), t).unwrap());
            }
        }
        prop_assert_eq!(a.entries(), b.entries());
    }

    #[test]
    fn km_merge_adds_exactly_one(cap in 1usize..10, seq in ops(2, 80)) {
        let mut m = ActionMemory::new(config(2, cap, Strategy::Km, Backend::SpatialTree)).unwrap();
        for (t, (k, r)) in seq.iter().enumerate() {
            let full = m.is_full();
            let before = total_count(&m);
            let effect = m.insert(&key(k), *r, t as u64).unwrap();
            if full {
                prop_assert!(matches!(effect, InsertEffect::Merged(_)));
                prop_assert!((total_count(&m) - before - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dkm_merges_conserve_and_replacements_reset(cap in 1usize..10, seq in ops(2, 150)) {
        let mut m = ActionMemory::new(config(2, cap, Strategy::Dkm, Backend::SpatialTree)).unwrap();
        for (t, (k, r)) in seq.iter().enumerate() {
            let full = m.is_full();
            let before = total_count(&m);
            let counts: Vec<f64> = m.entries().iter().map(|e| e.count).collect();
            match m.insert(&key(k), *r, t as u64).unwrap() {
                InsertEffect::Merged(_) => {
                    prop_assert!(full);
                    prop_assert!((total_count(&m) - before).abs() < 1e-9);
                }
                InsertEffect::Replaced(i) => {
                    prop_assert!(counts[i] <= 0.0);
                    prop_assert!(counts.iter().all(|&c| c >= counts[i]));
                    prop_assert_eq!(m.entries()[i].count, 1.0);
                    prop_assert!((total_count(&m) - before - (1.0 - counts[i])).abs() < 1e-9);
                }
                _ => prop_assert!(!full),
            }
        }
    }

    #[test]
    fn dkm_without_decay_is_km(cap in 1usize..10, seq in ops(2, 100)) {
        let mut km = ActionMemory::new(config(2, cap, Strategy::Km, Backend::SpatialTree)).unwrap();
        let mut dkm = ActionMemory::new(config(2, cap, Strategy::Dkm, Backend::SpatialTree))
            .unwrap()
            .with_cluster_decay(0.0);
        for (t, (k, r)) in seq.iter().enumerate() {
            km.insert(&key(k), *r, t as u64).unwrap();
            dkm.insert(&key(k), *r, t as u64).unwrap();
        }
        prop_assert_eq!(km.entries(), dkm.entries());
    }

    #[test]
    fn single_cluster_centroid_is_the_mean(
        first in prop::collection::vec(-5.0f64..5.0, 3),
        rest in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..60),
    ) {
        let mut m = ActionMemory::new(config(3, 1, Strategy::Km, Backend::NaiveScan)).unwrap();
        m.insert(&key(&first), 0.0, 0).unwrap();
        for (t, p) in rest.iter().enumerate() {
            m.insert(&key(p), 0.0, t as u64 + 1).unwrap();
        }
        let n = (rest.len() + 1) as f64;
        for d in 0..3 {
            let mean = (first[d] + rest.iter().map(|p| p[d]).sum::<f64>()) / n;
            let c = m.entries()[0].key.as_slice()[d];
            prop_assert!((c - mean).abs() <= 1e-9 * (1.0 + mean.abs()), "{c} vs {mean}");
        }
        prop_assert_eq!(m.entries()[0].count, n);
    }

    #[test]
    fn ranked_strategies_keep_the_running_max(
        strategy in prop::sample::select(vec![Strategy::Lru, Strategy::Rew, Strategy::Sur]),
        seq in ops(1, 80),
    ) {
        // capacity covers every lattice key, so nothing is evicted
        let mut m = ActionMemory::new(config(1, 9, strategy, Backend::SpatialTree)).unwrap();
        let mut best = std::collections::HashMap::new();
        for (t, (k, r)) in seq.iter().enumerate() {
            m.insert(&key(k), *r, t as u64).unwrap();
            let slot = best.entry(k[0].to_bits()).or_insert(f64::NEG_INFINITY);
            *slot = f64::max(*slot, *r);
        }
        prop_assert_eq!(m.len(), best.len());
        for e in m.entries() {
            prop_assert_eq!(e.q, best[&e.key.as_slice()[0].to_bits()]);
        }
    }
}
