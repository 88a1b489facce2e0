use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::AnalysisError;

/// Result of a batch k-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<[f64; 2]>,
    /// Cluster index of every input point.
    pub assignments: Vec<usize>,
    /// Points per cluster.
    pub sizes: Vec<usize>,
    /// Inertia after each assignment step.
    pub inertia: Vec<f64>,
    /// Number of assignment steps performed.
    pub iterations: usize,
    /// Stopped because assignments stopped changing.
    pub converged: bool,
}

fn dist2(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Nearest centroid, lowest index on ties.
fn nearest(p: &[f64; 2], centroids: &[[f64; 2]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = dist2(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Lloyd's algorithm, initialised from `k` distinct input points chosen with
/// `seed`.
///
/// A cluster that loses all its points keeps its previous centroid.
pub fn batch_kmeans(points: &[[f64; 2]], k: usize, max_iters: usize, seed: u64) -> Result<KMeans, AnalysisError> {
    if k == 0 {
        return Err(AnalysisError::InvalidParameter("k must be positive".into()));
    }
    if k > points.len() {
        return Err(AnalysisError::TooFewPoints { k, n: points.len() });
    }
    if max_iters == 0 {
        return Err(AnalysisError::InvalidParameter("max_iters must be positive".into()));
    }
    if let Some(i) = points.iter().position(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return Err(AnalysisError::InvalidParameter(format!("point {i} is not finite")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut init = rand::seq::index::sample(&mut rng, points.len(), k).into_vec();
    init.sort_unstable();
    let mut centroids: Vec<[f64; 2]> = init.iter().map(|&i| points[i]).collect();

    let mut assignments = vec![usize::MAX; points.len()];
    let mut inertia = Vec::new();
    let mut converged = false;
    for _ in 0..max_iters {
        let mut changed = false;
        let mut total = 0.0;
        for (p, a) in points.iter().zip(assignments.iter_mut()) {
            let (j, d) = nearest(p, &centroids);
            total += d;
            if *a != j {
                *a = j;
                changed = true;
            }
        }
        inertia.push(total);
        if !changed {
            converged = true;
            break;
        }
        let mut sums = vec![[0.0; 2]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            sums[a][0] += p[0];
            sums[a][1] += p[1];
            counts[a] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = [sums[j][0] / counts[j] as f64, sums[j][1] / counts[j] as f64];
            }
        }
    }

    let mut sizes = vec![0; k];
    for &a in &assignments {
        sizes[a] += 1;
    }
    Ok(KMeans {
        centroids,
        assignments,
        sizes,
        iterations: inertia.len(),
        inertia,
        converged,
    })
}
