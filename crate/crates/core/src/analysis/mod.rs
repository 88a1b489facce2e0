//! How bounded memories cover a drifting 2D stream: batch k-means, streaming
//! store snapshots and kernel density grids.

mod kde;
mod kmeans;
mod study;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::envs::{synthetic_stream, EnvError, StreamSpec};
use crate::memory::MemoryError;

pub use kde::{kde_grid, scott_bandwidth, Bounds, DensityGrid};
pub use kmeans::{batch_kmeans, KMeans};
pub use study::{
    final_phase2_fractions, phase2_region, skew_normal_cdf, skew_normal_quantile, stream_study,
    CentroidSnapshot, StudyMethod, DEFAULT_STUDY_MEMORY, SNAPSHOT_FRACTIONS,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no input points")]
    EmptyInput,
    #[error("asked for {k} clusters from {n} points")]
    TooFewPoints { k: usize, n: usize },
    #[error("{0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Stream(#[from] EnvError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Csv { path: PathBuf, message: String },
}

impl PartialEq for AnalysisError {
    fn eq(&self, other: &Self) -> bool {
        use AnalysisError::*;
        match (self, other) {
            (EmptyInput, EmptyInput) => true,
            (TooFewPoints { k: a, n: b }, TooFewPoints { k: c, n: d }) => a == c && b == d,
            (InvalidParameter(a), InvalidParameter(b)) => a == b,
            (Stream(a), Stream(b)) => a == b,
            (Memory(a), Memory(b)) => a == b,
            _ => false,
        }
    }
}

/// Density grid bounds used for study exports.
pub const STUDY_BOUNDS: Bounds = Bounds {
    min: [-0.25, -0.25],
    max: [1.5, 1.5],
};
pub const STUDY_RESOLUTION: [usize; 2] = [70, 70];

/// Files written by [`export_study`].
#[derive(Debug, Clone, PartialEq)]
pub struct StudyExport {
    pub snapshots: Vec<CentroidSnapshot>,
    pub files: Vec<PathBuf>,
}

/// Run [`stream_study`] and write `snapshots.csv` plus one
/// `density_<method>.csv` per method (final snapshot, weighted by cluster
/// counts) and `density_stream.csv` for the raw stream.
pub fn export_study(spec: &StreamSpec, memory_size: usize, out_dir: &Path) -> Result<StudyExport, AnalysisError> {
    let snapshots = stream_study(spec, memory_size)?;
    std::fs::create_dir_all(out_dir).map_err(|source| AnalysisError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    let path = out_dir.join("snapshots.csv");
    write_snapshots_csv(&snapshots, &path)?;
    files.push(path);

    for method in StudyMethod::ALL {
        let Some(last) = snapshots.iter().filter(|s| s.method == method).last() else {
            continue;
        };
        let weights = last.counts.as_ref().map(|c| c.iter().map(|n| n.max(0.0)).collect::<Vec<f64>>());
        let weights = weights.filter(|w| w.iter().sum::<f64>() > 0.0);
        let grid = kde_grid(&last.centroids, weights.as_deref(), STUDY_RESOLUTION, STUDY_BOUNDS, None)?;
        let path = out_dir.join(format!("density_{}.csv", method.name()));
        write_density_csv(&grid, &path)?;
        files.push(path);
    }
    let stream = synthetic_stream(spec)?;
    let grid = kde_grid(&stream, None, STUDY_RESOLUTION, STUDY_BOUNDS, None)?;
    let path = out_dir.join("density_stream.csv");
    write_density_csv(&grid, &path)?;
    files.push(path);
    Ok(StudyExport { snapshots, files })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, AnalysisError> {
    let file = std::fs::File::create(path).map_err(|source| AnalysisError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .flexible(true)
        .from_writer(file))
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<(), AnalysisError> {
    w.flush().map_err(|source| AnalysisError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Columns `method,fraction,x,y,n`; `n` is empty for LRU.
pub fn write_snapshots_csv(snapshots: &[CentroidSnapshot], path: &Path) -> Result<(), AnalysisError> {
    let err = |e: csv::Error| AnalysisError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv_writer(path)?;
    w.write_record(["method", "fraction", "x", "y", "n"]).map_err(err)?;
    for s in snapshots {
        for (i, c) in s.centroids.iter().enumerate() {
            let n = s.counts.as_ref().map(|v| v[i].to_string()).unwrap_or_default();
            w.write_record([s.method.name().to_string(), s.fraction.to_string(), c[0].to_string(), c[1].to_string(), n])
                .map_err(err)?;
        }
    }
    finish(w, path)
}

/// One line per grid row, lowest `y` first, `x` increasing along the line.
pub fn write_density_csv(grid: &DensityGrid, path: &Path) -> Result<(), AnalysisError> {
    let err = |e: csv::Error| AnalysisError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv_writer(path)?;
    for row in &grid.values {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(err)?;
    }
    finish(w, path)
}
