use statrs::distribution::{ContinuousCDF, Normal};

use super::kde::Bounds;
use super::kmeans::batch_kmeans;
use super::AnalysisError;
use crate::envs::{synthetic_stream, StreamSpec};
use crate::memory::{ActionMemory, Backend, Key, KernelParams, MemoryConfig, Strategy};

/// Stream fractions at which snapshots are taken.
pub const SNAPSHOT_FRACTIONS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Memory size used when none is given.
pub const DEFAULT_STUDY_MEMORY: usize = 50;

const KMEANS_MAX_ITERS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StudyMethod {
    /// Lloyd's k-means on every point seen so far.
    BatchKMeans,
    OnlineKMeans,
    DynamicKMeans,
    Lru,
}

impl StudyMethod {
    pub const ALL: [StudyMethod; 4] = [
        StudyMethod::BatchKMeans,
        StudyMethod::OnlineKMeans,
        StudyMethod::DynamicKMeans,
        StudyMethod::Lru,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StudyMethod::BatchKMeans => "kmeans",
            StudyMethod::OnlineKMeans => "km",
            StudyMethod::DynamicKMeans => "dkm",
            StudyMethod::Lru => "lru",
        }
    }

    fn store_strategy(self) -> Option<Strategy> {
        match self {
            StudyMethod::BatchKMeans => None,
            StudyMethod::OnlineKMeans => Some(Strategy::Km),
            StudyMethod::DynamicKMeans => Some(Strategy::Dkm),
            StudyMethod::Lru => Some(Strategy::Lru),
        }
    }
}

impl std::fmt::Display for StudyMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Memory contents of one method after a fraction of the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSnapshot {
    pub method: StudyMethod,
    pub fraction: f64,
    pub centroids: Vec<[f64; 2]>,
    /// Cluster counts for the k-means methods; `None` for LRU.
    pub counts: Option<Vec<f64>>,
}

impl CentroidSnapshot {
    /// Share of centroids inside `region`.
    pub fn fraction_inside(&self, region: &Bounds) -> f64 {
        if self.centroids.is_empty() {
            return 0.0;
        }
        self.centroids.iter().filter(|c| region.contains(c)).count() as f64 / self.centroids.len() as f64
    }
}

fn prefix_len(total: usize, fraction: f64) -> usize {
    ((total as f64 * fraction).round() as usize).min(total)
}

/// Feed the stream through kM, DkM and LRU point stores of `memory_size`
/// entries and run batch k-means on each prefix, snapshotting all four at
/// [`SNAPSHOT_FRACTIONS`].
///
/// Snapshots are ordered by method, then fraction. LRU centroids are listed
/// from least to most recently seen.
pub fn stream_study(spec: &StreamSpec, memory_size: usize) -> Result<Vec<CentroidSnapshot>, AnalysisError> {
    if memory_size < 2 {
        return Err(AnalysisError::InvalidParameter(format!(
            "memory size must be at least 2, got {memory_size}"
        )));
    }
    let stream = synthetic_stream(spec)?;
    let cuts: Vec<usize> = SNAPSHOT_FRACTIONS.iter().map(|&f| prefix_len(stream.len(), f)).collect();

    let mut out = Vec::with_capacity(16);
    for method in StudyMethod::ALL {
        match method.store_strategy() {
            None => {
                for (&fraction, &cut) in SNAPSHOT_FRACTIONS.iter().zip(&cuts) {
                    let seen = &stream[..cut];
                    let k = memory_size.min(seen.len());
                    let km = batch_kmeans(seen, k, KMEANS_MAX_ITERS, spec.seed)?;
                    out.push(CentroidSnapshot {
                        method,
                        fraction,
                        centroids: km.centroids,
                        counts: Some(km.sizes.iter().map(|&s| s as f64).collect()),
                    });
                }
            }
            Some(strategy) => {
                let mut store = ActionMemory::new(MemoryConfig {
                    dim: 2,
                    capacity: memory_size,
                    strategy,
                    backend: Backend::SpatialTree,
                    kernel: KernelParams::default(),
                })?;
                let mut next = 0;
                for (&fraction, &cut) in SNAPSHOT_FRACTIONS.iter().zip(&cuts) {
                    for (t, p) in stream.iter().enumerate().take(cut).skip(next) {
                        store.insert(&Key::new(p.to_vec())?, 0.0, t as u64)?;
                    }
                    next = cut;
                    out.push(snapshot_store(&store, method, fraction));
                }
            }
        }
    }
    Ok(out)
}

fn snapshot_store(store: &ActionMemory, method: StudyMethod, fraction: f64) -> CentroidSnapshot {
    let mut entries: Vec<_> = store.entries().iter().collect();
    if method == StudyMethod::Lru {
        entries.sort_by_key(|e| e.last_used);
    }
    let centroids = entries.iter().map(|e| [e.key.as_slice()[0], e.key.as_slice()[1]]).collect();
    let counts = (method != StudyMethod::Lru).then(|| entries.iter().map(|e| e.count).collect());
    CentroidSnapshot {
        method,
        fraction,
        centroids,
        counts,
    }
}

/// CDF of the standard skew-normal with shape `alpha`:
/// `Phi(z) - 2 T(z, alpha)`, with Owen's T function integrated by composite
/// Simpson.
pub fn skew_normal_cdf(z: f64, alpha: f64) -> f64 {
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    (std.cdf(z) - 2.0 * owens_t(z, alpha)).clamp(0.0, 1.0)
}

/// `T(h, a) = 1/(2 pi) * integral_0^a exp(-h^2 (1 + x^2) / 2) / (1 + x^2) dx`.
fn owens_t(h: f64, a: f64) -> f64 {
    const STEPS: usize = 4000;
    let f = |x: f64| (-0.5 * h * h * (1.0 + x * x)).exp() / (1.0 + x * x);
    let step = a / STEPS as f64;
    let mut acc = f(0.0) + f(a);
    for i in 1..STEPS {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * step);
    }
    acc * step / 3.0 / (2.0 * std::f64::consts::PI)
}

/// Quantile of the standard skew-normal by bisection on [`skew_normal_cdf`].
pub fn skew_normal_quantile(p: f64, alpha: f64) -> f64 {
    let (mut lo, mut hi) = (-12.0, 12.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if skew_normal_cdf(mid, alpha) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Axis-aligned box holding the central `mass` of the skew-normal phase.
///
/// The axes are independent, so each axis keeps its central `sqrt(mass)`.
pub fn phase2_region(spec: &StreamSpec, mass: f64) -> Result<Bounds, AnalysisError> {
    if !(mass > 0.0 && mass < 1.0) {
        return Err(AnalysisError::InvalidParameter(format!("region mass must lie in (0, 1), got {mass}")));
    }
    spec.validate()?;
    let per_axis = mass.sqrt();
    let (p_lo, p_hi) = ((1.0 - per_axis) / 2.0, (1.0 + per_axis) / 2.0);
    let mut b = Bounds {
        min: [0.0; 2],
        max: [0.0; 2],
    };
    for d in 0..2 {
        let (xi, omega, alpha) = (spec.location[d], spec.scale[d], spec.shape[d]);
        b.min[d] = xi + omega * skew_normal_quantile(p_lo, alpha);
        b.max[d] = xi + omega * skew_normal_quantile(p_hi, alpha);
    }
    Ok(b)
}

/// Final-snapshot share of centroids inside the central-90% phase-2 box, per
/// method.
pub fn final_phase2_fractions(
    spec: &StreamSpec,
    snapshots: &[CentroidSnapshot],
) -> Result<Vec<(StudyMethod, f64)>, AnalysisError> {
    let region = phase2_region(spec, 0.9)?;
    Ok(StudyMethod::ALL
        .into_iter()
        .filter_map(|m| {
            snapshots
                .iter()
                .filter(|s| s.method == m)
                .max_by(|a, b| a.fraction.total_cmp(&b.fraction))
                .map(|s| (m, s.fraction_inside(&region)))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_spec(seed: u64) -> StreamSpec {
        StreamSpec {
            points_per_axis: 8,
            samples: 100,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn symmetric_case_matches_normal() {
        let std = Normal::new(0.0, 1.0).unwrap();
        for z in [-2.5, -1.0, 0.0, 0.3, 1.7] {
            assert_relative_eq!(skew_normal_cdf(z, 0.0), std.cdf(z), epsilon = 1e-9);
        }
        assert_relative_eq!(skew_normal_quantile(0.975, 0.0), 1.959963984540054, epsilon = 1e-8);
    }

    #[test]
    fn cdf_matches_direct_integration_of_the_density() {
        // midpoint rule on 2 phi(t) Phi(alpha t), fine enough for 1e-7
        let std = Normal::new(0.0, 1.0).unwrap();
        for (z, a) in [(-0.4, 4.0), (0.9, 4.0), (1.6, -2.0), (0.2, 10.0)] {
            let n = 400_000;
            let lo = -12.0;
            let h = (z - lo) / n as f64;
            let direct: f64 = (0..n)
                .map(|i| {
                    let t = lo + (i as f64 + 0.5) * h;
                    2.0 * (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt() * std.cdf(a * t)
                })
                .sum::<f64>()
                * h;
            assert_relative_eq!(skew_normal_cdf(z, a), direct, epsilon = 1e-7);
        }
    }

    #[test]
    fn positive_shape_cdf_known_value() {
        // with alpha > 0, F(0) = 1/2 - atan(alpha) / pi
        for a in [0.5, 1.0, 4.0, 10.0] {
            let expected = 0.5 - f64::atan(a) / std::f64::consts::PI;
            assert_relative_eq!(skew_normal_cdf(0.0, a), expected, epsilon = 1e-9);
        }
    }

    #[test]
    fn region_holds_ninety_percent_of_samples() {
        let spec = StreamSpec {
            samples: 200_000,
            seed: 17,
            ..Default::default()
        };
        let region = phase2_region(&spec, 0.9).unwrap();
        let s = synthetic_stream(&spec).unwrap();
        let tail = &s[spec.phase1_len()..];
        let inside = tail.iter().filter(|p| region.contains(p)).count() as f64 / tail.len() as f64;
        // binomial standard error is about 7e-4
        assert!((inside - 0.9).abs() < 4e-3, "{inside}");
        assert!(phase2_region(&spec, 1.0).is_err());
    }

    #[test]
    fn snapshots_respect_capacity_and_order() {
        let spec = small_spec(4);
        let snaps = stream_study(&spec, 12).unwrap();
        assert_eq!(snaps.len(), 16);
        for (i, s) in snaps.iter().enumerate() {
            assert_eq!(s.method, StudyMethod::ALL[i / 4]);
            assert_eq!(s.fraction, SNAPSHOT_FRACTIONS[i % 4]);
            assert!(!s.centroids.is_empty() && s.centroids.len() <= 12);
            if let Some(c) = &s.counts {
                assert_eq!(c.len(), s.centroids.len());
            }
        }
        assert!(stream_study(&spec, 1).is_err());
    }

    #[test]
    fn lru_keeps_the_most_recent_points() {
        let spec = small_spec(9);
        let stream = synthetic_stream(&spec).unwrap();
        let snaps = stream_study(&spec, 10).unwrap();
        let last = snaps.iter().find(|s| s.method == StudyMethod::Lru && s.fraction == 1.0).unwrap();
        assert_eq!(last.centroids, stream[stream.len() - 10..].to_vec());
        assert!(last.counts.is_none());
    }

    #[test]
    fn batch_kmeans_final_counts_cover_the_stream() {
        let spec = small_spec(2);
        let snaps = stream_study(&spec, 6).unwrap();
        let last = snaps.iter().find(|s| s.method == StudyMethod::BatchKMeans && s.fraction == 1.0).unwrap();
        assert_eq!(last.counts.as_ref().unwrap().iter().sum::<f64>(), spec.len() as f64);
        let km = snaps.iter().find(|s| s.method == StudyMethod::OnlineKMeans && s.fraction == 1.0).unwrap();
        // online k-means counts every point exactly once
        assert_relative_eq!(km.counts.as_ref().unwrap().iter().sum::<f64>(), spec.len() as f64);
    }

    #[test]
    fn deterministic_given_seed() {
        assert_eq!(stream_study(&small_spec(3), 8).unwrap(), stream_study(&small_spec(3), 8).unwrap());
        assert_ne!(stream_study(&small_spec(3), 8).unwrap(), stream_study(&small_spec(5), 8).unwrap());
    }
}
