use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{EvalRecord, HarnessError};
use crate::envs::EnvKind;
use crate::memory::Strategy;

pub const CSV_HEADER: [&str; 6] = [
    "seed",
    "env",
    "strategy",
    "memory_size",
    "step",
    "mean_eval_reward",
];

/// Final score of one `(env, strategy, memory_size)` group.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalScore {
    pub env: EnvKind,
    pub strategy: Strategy,
    pub memory_size: usize,
    pub seeds: usize,
    /// Mean over seeds of each seed's last-`n` evaluation mean.
    pub mean: f64,
    /// Population standard deviation of the per-seed means.
    pub std: f64,
}

/// Average each seed's last `last_n` evaluations, then take mean and
/// population standard deviation across seeds.
///
/// Groups come out sorted by environment, strategy and memory size.
pub fn aggregate_final(records: &[EvalRecord], last_n: usize) -> Result<Vec<FinalScore>, HarnessError> {
    if last_n == 0 {
        return Err(HarnessError::Config {
            field: "last".into(),
            message: "need at least one evaluation per seed".into(),
        });
    }
    let mut groups: BTreeMap<(EnvKind, Strategy, usize), BTreeMap<u64, Vec<(u64, f64)>>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.env, r.strategy, r.memory_size))
            .or_default()
            .entry(r.seed)
            .or_default()
            .push((r.step, r.mean_eval_reward));
    }

    let mut out = Vec::with_capacity(groups.len());
    for ((env, strategy, memory_size), seeds) in groups {
        let mut seed_means = Vec::with_capacity(seeds.len());
        for (seed, mut evals) in seeds {
            if evals.len() < last_n {
                return Err(HarnessError::TooFewEvaluations {
                    seed,
                    group: format!("{env}/{strategy}/{memory_size}"),
                    found: evals.len(),
                    needed: last_n,
                });
            }
            evals.sort_by_key(|&(step, _)| step);
            let tail = &evals[evals.len() - last_n..];
            seed_means.push(tail.iter().map(|&(_, v)| v).sum::<f64>() / last_n as f64);
        }
        let n = seed_means.len() as f64;
        let mean = seed_means.iter().sum::<f64>() / n;
        let var = seed_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n;
        out.push(FinalScore {
            env,
            strategy,
            memory_size,
            seeds: seed_means.len(),
            mean,
            std: var.sqrt(),
        });
    }
    Ok(out)
}

/// Plain-text table, one row per group.
pub fn format_table(scores: &[FinalScore]) -> String {
    let mut s = format!(
        "{:<10} {:<8} {:>11} {:>5} {:>12} {:>10}\n",
        "env", "strategy", "memory_size", "seeds", "mean", "std"
    );
    for sc in scores {
        let _ = writeln!(
            s,
            "{:<10} {:<8} {:>11} {:>5} {:>12.2} {:>10.2}",
            sc.env.name(),
            sc.strategy.name(),
            sc.memory_size,
            sc.seeds,
            sc.mean,
            sc.std
        );
    }
    s
}

/// Write records in `(seed, step)` order. Floats use Rust's shortest
/// round-trip formatting, so the bytes depend only on the values.
pub fn write_csv(records: &[EvalRecord], path: &Path) -> Result<(), HarnessError> {
    let io_err = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    write_records(records, file).map_err(io_err)
}

/// [`write_csv`] to any writer.
pub fn write_records<W: std::io::Write>(records: &[EvalRecord], writer: W) -> std::io::Result<()> {
    let mut sorted: Vec<&EvalRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.seed, r.step));
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in sorted {
        w.write_record([
            r.seed.to_string(),
            r.env.name().to_string(),
            r.strategy.name().to_string(),
            r.memory_size.to_string(),
            r.step.to_string(),
            r.mean_eval_reward.to_string(),
        ])?;
    }
    w.flush()
}

pub fn read_csv(path: &Path) -> Result<Vec<EvalRecord>, HarnessError> {
    let bad = |message: String| HarnessError::Csv {
        path: path.to_path_buf(),
        message,
    };
    let file = std::fs::File::open(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(bad(format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }

    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| bad(e.to_string()))?;
        let field = |j: usize| row.get(j).unwrap_or_default();
        let num_err = |j: usize| bad(format!("line {line}: bad {} `{}`", CSV_HEADER[j], field(j)));
        out.push(EvalRecord {
            seed: field(0).parse().map_err(|_| num_err(0))?,
            env: field(1).parse().map_err(|e| bad(format!("line {line}: {e}")))?,
            strategy: field(2).parse().map_err(|e| bad(format!("line {line}: {e}")))?,
            memory_size: field(3).parse().map_err(|_| num_err(3))?,
            step: field(4).parse().map_err(|_| num_err(4))?,
            mean_eval_reward: field(5).parse().map_err(|_| num_err(5))?,
        });
    }
    Ok(out)
}
