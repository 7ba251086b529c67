//! Diagnostics over event logs and benchmarks: best-score-so-far
//! trajectories, epoch-budget speedups, per-epoch rank matrices, and
//! rank-stability statistics. Everything here is a pure function of its
//! inputs; CSV emitters write deterministic bytes.

use std::collections::BTreeMap;
use std::io::Write;

use crate::benchmark::{Benchmark, HpConfig};
use crate::engine::{Event, RunRecord};
use crate::{Error, Result};

/// Step curve of the best test objective reached so far, indexed by
/// cumulative consumed epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub policy: String,
    pub seed: u64,
    /// `(cumulative_epochs, best_test_so_far)`, strictly increasing in the
    /// first component, non-decreasing in the second.
    pub points: Vec<(usize, f64)>,
}

/// Builds the trajectory from an event log: after each event the candidate
/// value is the best test score among every trial's latest epoch, and the
/// emitted curve is its running maximum.
pub fn trajectory(events: &[Event], policy: &str, seed: u64) -> Result<Trajectory> {
    if events.is_empty() {
        return Err(Error::EventLog("empty event log".into()));
    }
    let mut latest_test: BTreeMap<usize, f64> = BTreeMap::new();
    let mut best = f64::NEG_INFINITY;
    let mut points = Vec::with_capacity(events.len());
    for event in events {
        latest_test.insert(event.trial, event.test);
        let snapshot = latest_test
            .values()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        best = best.max(snapshot);
        points.push((event.cum_epochs, best));
    }
    Ok(Trajectory {
        policy: policy.to_string(),
        seed,
        points,
    })
}

/// Epoch-budget ratio `cumulative_epochs(reference) / cumulative_epochs(a)`;
/// the reference is conventionally the max-fidelity record.
pub fn speedup(record: &RunRecord, reference: &RunRecord) -> f64 {
    reference.cumulative_epochs as f64 / record.cumulative_epochs as f64
}

/// Per-epoch dense ranks (1 = best validation score) for a set of configs,
/// rows sorted by final-epoch rank.
#[derive(Debug, Clone)]
pub struct RankMatrix {
    pub config_ids: Vec<String>,
    /// `ranks[row][epoch-1]`; each column is a permutation of 1..=n.
    pub ranks: Vec<Vec<usize>>,
    pub n_configs: usize,
    pub z_max: usize,
}

/// Ranks every config at every epoch by validation score. Ties break by
/// config id, then by position in `configs`.
pub fn rank_matrix(bench: &dyn Benchmark, configs: &[HpConfig], seed: u64) -> Result<RankMatrix> {
    if configs.is_empty() {
        return Err(Error::InvalidRunConfig("rank_matrix needs configs".into()));
    }
    let z_max = bench.z_max();
    let n = configs.len();
    let curves: Vec<Vec<f64>> = configs
        .iter()
        .map(|c| Ok(bench.full_curve(c, seed)?.valid))
        .collect::<Result<_>>()?;
    let ids: Vec<String> = configs.iter().map(|c| c.id()).collect();

    // ranks_by_config[config][epoch-1]
    let mut ranks_by_config = vec![vec![0usize; z_max]; n];
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 1..=z_max {
        order.sort_by(|&a, &b| {
            curves[b][epoch - 1]
                .partial_cmp(&curves[a][epoch - 1])
                .expect("finite scores")
                .then_with(|| ids[a].cmp(&ids[b]))
                .then_with(|| a.cmp(&b))
        });
        for (rank0, &config_idx) in order.iter().enumerate() {
            ranks_by_config[config_idx][epoch - 1] = rank0 + 1;
        }
    }

    let mut row_order: Vec<usize> = (0..n).collect();
    row_order.sort_by_key(|&i| ranks_by_config[i][z_max - 1]);
    Ok(RankMatrix {
        config_ids: row_order.iter().map(|&i| ids[i].clone()).collect(),
        ranks: row_order
            .iter()
            .map(|&i| ranks_by_config[i].clone())
            .collect(),
        n_configs: n,
        z_max,
    })
}

/// Spearman rank correlation between the ranking at epoch `z` and the
/// final ranking. Columns are tie-free permutations, so the closed form
/// `1 - 6 sum(d^2) / (n (n^2 - 1))` is exact.
pub fn rank_stability(matrix: &RankMatrix, z: usize) -> f64 {
    assert!(z >= 1 && z <= matrix.z_max, "epoch out of range");
    let n = matrix.n_configs;
    if n < 2 {
        return 1.0;
    }
    let sum_d2: f64 = matrix
        .ranks
        .iter()
        .map(|row| {
            let d = row[z - 1] as f64 - row[matrix.z_max - 1] as f64;
            d * d
        })
        .sum();
    let n = n as f64;
    1.0 - 6.0 * sum_d2 / (n * (n * n - 1.0))
}

/// Mean and standard error (sample standard deviation over sqrt(n));
/// a single value has standard error 0.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    assert!(!xs.is_empty());
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One row of `summary.csv`.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub policy: String,
    pub final_test_mean: f64,
    pub final_test_stderr: f64,
    pub total_epochs: f64,
    pub speedup: f64,
}

/// Aggregates per-policy results across seeds. The speedup reference is
/// the max-fidelity budget `T * z_max`, which the max-fidelity policy
/// consumes exactly.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut by_policy: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by_policy.entry(&r.policy).or_default().push(r);
    }
    by_policy
        .into_iter()
        .map(|(policy, rs)| {
            let finals: Vec<f64> = rs.iter().map(|r| r.selected_final_test).collect();
            let (final_test_mean, final_test_stderr) = mean_stderr(&finals);
            let totals: Vec<f64> = rs.iter().map(|r| r.cumulative_epochs as f64).collect();
            let (total_epochs, _) = mean_stderr(&totals);
            let reference: f64 = rs
                .iter()
                .map(|r| (r.outer_iters * r.z_max) as f64)
                .sum::<f64>()
                / rs.len() as f64;
            SummaryRow {
                policy: policy.to_string(),
                final_test_mean,
                final_test_stderr,
                total_epochs,
                speedup: reference / total_epochs,
            }
        })
        .collect()
}

pub fn write_trajectory_csv(mut w: impl Write, trajectories: &[Trajectory]) -> Result<()> {
    writeln!(w, "cum_epochs,best_test,policy,seed")?;
    for t in trajectories {
        for &(cum, best) in &t.points {
            writeln!(w, "{cum},{best},{},{}", t.policy, t.seed)?;
        }
    }
    Ok(())
}

pub fn write_rank_matrix_csv(mut w: impl Write, matrix: &RankMatrix) -> Result<()> {
    writeln!(w, "config_id,epoch,rank")?;
    for (id, row) in matrix.config_ids.iter().zip(&matrix.ranks) {
        for (epoch0, rank) in row.iter().enumerate() {
            writeln!(w, "{id},{},{rank}", epoch0 + 1)?;
        }
    }
    Ok(())
}

pub fn write_summary_csv(mut w: impl Write, rows: &[SummaryRow]) -> Result<()> {
    writeln!(
        w,
        "policy,final_test_mean,final_test_stderr,total_epochs,speedup"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.policy, r.final_test_mean, r.final_test_stderr, r.total_epochs, r.speedup
        )?;
    }
    Ok(())
}
