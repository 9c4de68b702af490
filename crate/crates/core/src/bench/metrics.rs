//! Gap, success and time metrics, and pairwise comparison of result tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Percentage gap of `best` over `reference`, guarded against references
/// near zero: `100 (best - ref) / max(|ref|, 1)`.
pub fn compute_gap(best: f64, reference: f64) -> f64 {
    100.0 * (best - reference) / reference.abs().max(1.0)
}

/// Gap when both values exist; never defaults to 0.
pub fn gap_opt(best: Option<f64>, reference: Option<f64>) -> Option<f64> {
    Some(compute_gap(best?, reference?))
}

/// Outcome of one seeded solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub instance: String,
    pub variant: String,
    pub seed: u64,
    pub feasible: bool,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub runs: usize,
    pub successful_runs: usize,
    #[serde(skip)]
    pub run_seconds: Vec<f64>,
    #[serde(skip)]
    pub successful_run_seconds: Vec<f64>,
    #[serde(skip)]
    pub seconds: f64,
}

/// Aggregate over the seeds of one instance and variant. Timing columns are
/// kept apart so that the outcome table is reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub instance: String,
    pub class: String,
    pub variant: String,
    pub seeds: usize,
    pub feasible_seeds: usize,
    /// Feasible seeds over requested seeds.
    pub success: f64,
    pub runs: usize,
    pub successful_runs: usize,
    /// Successful runs over all runs.
    pub run_success: f64,
    pub best_objective: Option<f64>,
    pub reference: Option<f64>,
    pub gap: Option<f64>,
    pub iterations: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub instance: String,
    pub variant: String,
    /// Mean seconds per run over all runs.
    pub mean_run_seconds: Option<f64>,
    /// Mean seconds per run over successful runs only.
    pub mean_successful_run_seconds: Option<f64>,
    pub mean_solve_seconds: Option<f64>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Folds the seed records of one instance and variant. `maximize` selects
/// the direction of "best".
pub fn aggregate(
    instance: &str,
    class: &str,
    variant: &str,
    records: &[SeedRecord],
    reference: Option<f64>,
    maximize: bool,
) -> (MetricsRow, TimingRow) {
    let objs = records.iter().filter_map(|r| r.objective);
    let best = if maximize {
        objs.fold(None, |b: Option<f64>, v| Some(b.map_or(v, |b| b.max(v))))
    } else {
        objs.fold(None, |b: Option<f64>, v| Some(b.map_or(v, |b| b.min(v))))
    };
    let feasible_seeds = records.iter().filter(|r| r.feasible).count();
    let runs: usize = records.iter().map(|r| r.runs).sum();
    let successful_runs: usize = records.iter().map(|r| r.successful_runs).sum();
    // a maximisation gap is measured on the negated objective
    let gap = if maximize {
        gap_opt(best.map(|b| -b), reference.map(|r| -r))
    } else {
        gap_opt(best, reference)
    };
    let all: Vec<f64> = records.iter().flat_map(|r| r.run_seconds.iter().copied()).collect();
    let ok: Vec<f64> = records.iter().flat_map(|r| r.successful_run_seconds.iter().copied()).collect();
    let solves: Vec<f64> = records.iter().map(|r| r.seconds).collect();
    let row = MetricsRow {
        instance: instance.to_string(),
        class: class.to_string(),
        variant: variant.to_string(),
        seeds: records.len(),
        feasible_seeds,
        success: ratio(feasible_seeds, records.len()),
        runs,
        successful_runs,
        run_success: ratio(successful_runs, runs),
        best_objective: best,
        reference,
        gap,
        iterations: records.iter().map(|r| r.iterations).sum(),
        error: None,
    };
    let timing = TimingRow {
        instance: instance.to_string(),
        variant: variant.to_string(),
        mean_run_seconds: mean(&all),
        mean_successful_run_seconds: mean(&ok),
        mean_solve_seconds: mean(&solves),
    };
    (row, timing)
}

/// Per-class counts of instances where one table has a strictly lower gap
/// than the other. An instance with no gap on one side counts for the side
/// that has one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompareRow {
    pub class: String,
    pub instances: usize,
    pub left_lower: usize,
    pub right_lower: usize,
    pub ties: usize,
}

pub fn compare_gaps(left: &[MetricsRow], right: &[MetricsRow]) -> Vec<CompareRow> {
    let rmap: BTreeMap<&str, &MetricsRow> = right.iter().map(|r| (r.instance.as_str(), r)).collect();
    let mut classes: BTreeMap<String, CompareRow> = BTreeMap::new();
    let mut total = CompareRow {
        class: "total".to_string(),
        instances: 0,
        left_lower: 0,
        right_lower: 0,
        ties: 0,
    };
    for l in left {
        let Some(r) = rmap.get(l.instance.as_str()) else {
            continue;
        };
        let class = if l.class.is_empty() { "-".to_string() } else { l.class.clone() };
        let entry = classes.entry(class.clone()).or_insert_with(|| CompareRow {
            class,
            instances: 0,
            left_lower: 0,
            right_lower: 0,
            ties: 0,
        });
        let lg = l.gap.unwrap_or(f64::INFINITY);
        let rg = r.gap.unwrap_or(f64::INFINITY);
        for row in [&mut *entry, &mut total] {
            row.instances += 1;
            if lg < rg {
                row.left_lower += 1;
            } else if rg < lg {
                row.right_lower += 1;
            } else {
                row.ties += 1;
            }
        }
    }
    let mut out: Vec<CompareRow> = classes.into_values().collect();
    out.push(total);
    out
}
