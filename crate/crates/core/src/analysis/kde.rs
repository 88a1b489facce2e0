use statrs::distribution::{ContinuousCDF, Normal};

use super::AnalysisError;

/// Axis-aligned rectangle `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Bounds {
    pub fn contains(&self, p: &[f64; 2]) -> bool {
        (0..2).all(|d| self.min[d] <= p[d] && p[d] <= self.max[d])
    }
}

/// Gaussian kernel density on a regular lattice.
///
/// `values[iy][ix]` is the average density over cell `(ix, iy)`; row 0 is the
/// lowest `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub resolution: [usize; 2],
    pub bounds: Bounds,
    pub bandwidth: f64,
    pub values: Vec<Vec<f64>>,
}

impl DensityGrid {
    pub fn cell_size(&self) -> [f64; 2] {
        [0, 1].map(|d| (self.bounds.max[d] - self.bounds.min[d]) / self.resolution[d] as f64)
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> [f64; 2] {
        let s = self.cell_size();
        [
            self.bounds.min[0] + (ix as f64 + 0.5) * s[0],
            self.bounds.min[1] + (iy as f64 + 0.5) * s[1],
        ]
    }

    /// Probability mass inside the bounds.
    pub fn mass(&self) -> f64 {
        let s = self.cell_size();
        self.values.iter().flatten().sum::<f64>() * s[0] * s[1]
    }

    /// `(ix, iy)` of the largest cell, first in row-major order on ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (iy, row) in self.values.iter().enumerate() {
            for (ix, &v) in row.iter().enumerate() {
                if v > best.2 {
                    best = (ix, iy, v);
                }
            }
        }
        (best.0, best.1)
    }
}

fn weighted_stats(points: &[[f64; 2]], weights: &[f64]) -> ([f64; 2], [f64; 2], f64) {
    let total: f64 = weights.iter().sum();
    let mut mean = [0.0; 2];
    for (p, w) in points.iter().zip(weights) {
        for d in 0..2 {
            mean[d] += w * p[d] / total;
        }
    }
    let mut var = [0.0; 2];
    for (p, w) in points.iter().zip(weights) {
        for d in 0..2 {
            var[d] += w * (p[d] - mean[d]).powi(2) / total;
        }
    }
    let n_eff = total * total / weights.iter().map(|w| w * w).sum::<f64>();
    (mean, var, n_eff)
}

/// Scott's rule for an isotropic 2D Gaussian kernel: `sigma * n^(-1/6)`,
/// where `sigma` is the root mean per-axis variance and `n` the effective
/// sample size of the weights. Returns `None` when all points coincide.
pub fn scott_bandwidth(points: &[[f64; 2]], weights: Option<&[f64]>) -> Option<f64> {
    if points.is_empty() {
        return None;
    }
    let ones = vec![1.0; points.len()];
    let weights = weights.unwrap_or(&ones);
    let mut live = points.iter().zip(weights).filter(|(_, &w)| w > 0.0).map(|(p, _)| p);
    let first = live.next()?;
    if live.all(|p| p == first) {
        return None;
    }
    let (_, var, n_eff) = weighted_stats(points, weights);
    let sigma = ((var[0] + var[1]) / 2.0).sqrt();
    let h = sigma * n_eff.powf(-1.0 / 6.0);
    (h > 0.0 && h.is_finite()).then_some(h)
}

/// Kernel density of `points` averaged over each lattice cell.
///
/// Each point contributes the exact Gaussian mass of every cell (a product of
/// per-axis normal CDF differences), so the in-bounds mass is exact up to
/// rounding. Weights are normalised to sum to one. `bandwidth = None` uses
/// [`scott_bandwidth`], falling back to the larger cell side when the points
/// have no spread.
pub fn kde_grid(
    points: &[[f64; 2]],
    weights: Option<&[f64]>,
    resolution: [usize; 2],
    bounds: Bounds,
    bandwidth: Option<f64>,
) -> Result<DensityGrid, AnalysisError> {
    if points.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    if resolution.contains(&0) {
        return Err(AnalysisError::InvalidParameter("grid resolution must be positive".into()));
    }
    if !(0..2).all(|d| bounds.max[d] > bounds.min[d] && bounds.min[d].is_finite() && bounds.max[d].is_finite()) {
        return Err(AnalysisError::InvalidParameter(format!("degenerate bounds {bounds:?}")));
    }
    if points.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return Err(AnalysisError::InvalidParameter("points must be finite".into()));
    }
    let ones;
    let weights = match weights {
        Some(w) => {
            if w.len() != points.len() {
                return Err(AnalysisError::InvalidParameter(format!(
                    "{} weights for {} points",
                    w.len(),
                    points.len()
                )));
            }
            if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
                return Err(AnalysisError::InvalidParameter(
                    "weights must be non-negative with a positive sum".into(),
                ));
            }
            w
        }
        None => {
            ones = vec![1.0; points.len()];
            &ones[..]
        }
    };
    let cell = [0, 1].map(|d| (bounds.max[d] - bounds.min[d]) / resolution[d] as f64);
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(AnalysisError::InvalidParameter(format!("bandwidth must be positive, got {h}"))),
        None => scott_bandwidth(points, Some(weights)).unwrap_or(cell[0].max(cell[1])),
    };

    let std = Normal::new(0.0, 1.0).expect("standard normal");
    let total: f64 = weights.iter().sum();
    let edges: [Vec<f64>; 2] =
        [0, 1].map(|d| (0..=resolution[d]).map(|i| bounds.min[d] + i as f64 * cell[d]).collect());
    let area = cell[0] * cell[1];
    let mut values = vec![vec![0.0; resolution[0]]; resolution[1]];
    let mut mass = [vec![0.0; resolution[0]], vec![0.0; resolution[1]]];
    for (p, &w) in points.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for d in 0..2 {
            let cdf: Vec<f64> = edges[d].iter().map(|e| std.cdf((e - p[d]) / h)).collect();
            for (m, c) in mass[d].iter_mut().zip(cdf.windows(2)) {
                *m = c[1] - c[0];
            }
        }
        let scale = w / total / area;
        for (row, my) in values.iter_mut().zip(&mass[1]) {
            for (v, mx) in row.iter_mut().zip(&mass[0]) {
                *v += scale * mx * my;
            }
        }
    }
    Ok(DensityGrid {
        resolution,
        bounds,
        bandwidth: h,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const UNIT: Bounds = Bounds {
        min: [0.0, 0.0],
        max: [1.0, 1.0],
    };

    #[test]
    fn single_point_peaks_in_its_cell() {
        for p in [[0.33, 0.71], [0.02, 0.98], [0.5, 0.5], [0.91, 0.13]] {
            let g = kde_grid(&[p], None, [20, 20], UNIT, Some(0.05)).unwrap();
            let expect = ((p[0] * 20.0).floor() as usize, (p[1] * 20.0).floor() as usize);
            assert_eq!(g.argmax(), expect, "{p:?}");
        }
    }

    #[test]
    fn mass_is_one_for_contained_data() {
        let pts: Vec<[f64; 2]> = (0..50).map(|i| [0.4 + 0.004 * i as f64, 0.6 - 0.003 * i as f64]).collect();
        let g = kde_grid(&pts, None, [40, 30], UNIT, Some(0.03)).unwrap();
        assert_relative_eq!(g.mass(), 1.0, epsilon = 1e-6);
        assert!(g.values.iter().flatten().all(|&v| v >= 0.0));
    }

    #[test]
    fn mass_outside_bounds_is_lost() {
        // a point on the left edge keeps half its mass
        let g = kde_grid(&[[0.0, 0.5]], None, [50, 50], UNIT, Some(0.02)).unwrap();
        assert_relative_eq!(g.mass(), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn cell_value_matches_direct_integration() {
        // independent check by midpoint-rule integration of the kernel
        let p = [0.37, 0.52];
        let h = 0.08;
        let g = kde_grid(&[p], None, [10, 10], UNIT, Some(h)).unwrap();
        let (ix, iy) = (4, 5);
        let n = 400;
        let s = g.cell_size();
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                let x = ix as f64 * s[0] + (a as f64 + 0.5) * s[0] / n as f64;
                let y = iy as f64 * s[1] + (b as f64 + 0.5) * s[1] / n as f64;
                let r2 = (x - p[0]).powi(2) + (y - p[1]).powi(2);
                acc += (-r2 / (2.0 * h * h)).exp() / (2.0 * std::f64::consts::PI * h * h);
            }
        }
        acc /= (n * n) as f64;
        assert_relative_eq!(g.values[iy][ix], acc, max_relative = 1e-5);
    }

    #[test]
    fn scott_rule() {
        // variance 1 per axis, n = 64 -> h = 64^(-1/6) = 0.5
        let mut pts = Vec::new();
        for _ in 0..16 {
            pts.extend([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]]);
        }
        assert_relative_eq!(scott_bandwidth(&pts, None).unwrap(), 0.5, max_relative = 1e-12);
        assert_eq!(scott_bandwidth(&[[1.0, 1.0]; 3], None), None);
        let g = kde_grid(&[[0.5, 0.5]], None, [8, 4], UNIT, None).unwrap();
        assert_eq!(g.bandwidth, 0.25);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(kde_grid(&[], None, [4, 4], UNIT, None).unwrap_err(), AnalysisError::EmptyInput);
        let p = [[0.5, 0.5]];
        assert!(kde_grid(&p, None, [0, 4], UNIT, None).is_err());
        assert!(kde_grid(&p, None, [4, 4], UNIT, Some(0.0)).is_err());
        assert!(kde_grid(&p, Some(&[-1.0]), [4, 4], UNIT, None).is_err());
        assert!(kde_grid(&p, Some(&[1.0, 2.0]), [4, 4], UNIT, None).is_err());
        let flat = Bounds {
            min: [0.0, 1.0],
            max: [1.0, 1.0],
        };
        assert!(kde_grid(&p, None, [4, 4], flat, None).is_err());
    }

    fn pts_strategy() -> impl Strategy<Value = Vec<([f64; 2], f64)>> {
        prop::collection::vec(((0.0f64..1.0, 0.0f64..1.0), 0.1f64..5.0), 1..25)
            .prop_map(|v| v.into_iter().map(|((x, y), w)| ([x, y], w)).collect())
    }

    proptest! {
        #[test]
        fn weight_scale_invariant(data in pts_strategy(), c in 0.5f64..10.0) {
            let pts: Vec<_> = data.iter().map(|d| d.0).collect();
            let w: Vec<_> = data.iter().map(|d| d.1).collect();
            let w2: Vec<_> = w.iter().map(|x| x * c).collect();
            let a = kde_grid(&pts, Some(&w), [12, 12], UNIT, None).unwrap();
            let b = kde_grid(&pts, Some(&w2), [12, 12], UNIT, None).unwrap();
            prop_assert!((a.bandwidth - b.bandwidth).abs() <= 1e-12 * a.bandwidth);
            for (ra, rb) in a.values.iter().zip(&b.values) {
                for (x, y) in ra.iter().zip(rb) {
                    prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
                }
            }
        }

        #[test]
        fn permutation_invariant(data in pts_strategy(), rot in 0usize..25) {
            let pts: Vec<_> = data.iter().map(|d| d.0).collect();
            let w: Vec<_> = data.iter().map(|d| d.1).collect();
            let r = rot % pts.len();
            let mut pts2 = pts.clone();
            let mut w2 = w.clone();
            pts2.rotate_left(r);
            w2.rotate_left(r);
            pts2.reverse();
            w2.reverse();
            let a = kde_grid(&pts, Some(&w), [10, 10], UNIT, None).unwrap();
            let b = kde_grid(&pts2, Some(&w2), [10, 10], UNIT, None).unwrap();
            for (ra, rb) in a.values.iter().zip(&b.values) {
                for (x, y) in ra.iter().zip(rb) {
                    prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
                }
            }
            prop_assert!(a.values.iter().flatten().all(|&v| v >= 0.0));
            prop_assert!(a.mass() <= 1.0 + 1e-9);
        }
    }
}
