//! Batch experiments: a manifest of instances, variants and seeds, solved as
//! independent jobs and folded into result tables.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::{aggregate, MetricsRow, SeedRecord, TimingRow};
use crate::afp::afp_solve;
use crate::engine::{Event, Phase, SolveReport, SolverConfig, StopReason};
use crate::fixtures;
use crate::fp::fp_solve;
use crate::lp::LpStatus;
use crate::model::{MipInstance, ObjSense};
use crate::twostage::{afp_twostage_solve, fp_twostage_solve};

/// Version of the CSV column layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("references line {line}: {msg}")]
    References { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Fp,
    Afp,
}

/// An algorithm and a stage count, written `afp-2`, `fp-1` and so on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Variant {
    pub algorithm: Algorithm,
    pub stages: u8,
}

impl Variant {
    pub const AFP2: Variant = Variant {
        algorithm: Algorithm::Afp,
        stages: 2,
    };

    pub fn solve(self, inst: &MipInstance, cfg: &SolverConfig, seed: u64) -> SolveReport {
        match (self.algorithm, self.stages) {
            (Algorithm::Fp, 1) => fp_solve(inst, cfg, seed),
            (Algorithm::Fp, _) => fp_twostage_solve(inst, cfg, seed),
            (Algorithm::Afp, 1) => afp_solve(inst, cfg, seed),
            (Algorithm::Afp, _) => afp_twostage_solve(inst, cfg, seed),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let alg = match self.algorithm {
            Algorithm::Fp => "fp",
            Algorithm::Afp => "afp",
        };
        write!(f, "{alg}-{}", self.stages)
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let (alg, stages) = match s.split_once(['-', ':']) {
            Some((a, n)) => (a.to_string(), n.to_string()),
            None => {
                let split = s.find(|c: char| c.is_ascii_digit()).unwrap_or(s.len());
                (s[..split].to_string(), s[split..].to_string())
            }
        };
        let algorithm = match alg.as_str() {
            "fp" => Algorithm::Fp,
            "afp" => Algorithm::Afp,
            _ => return Err(format!("unknown algorithm `{alg}`")),
        };
        let stages = match stages.as_str() {
            "" | "1" => 1,
            "2" => 2,
            _ => return Err(format!("stages must be 1 or 2, got `{stages}`")),
        };
        Ok(Variant { algorithm, stages })
    }
}

impl TryFrom<String> for Variant {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Variant> for String {
    fn from(v: Variant) -> String {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEntry {
    /// Display name; defaults to the file stem or fixture name.
    pub name: Option<String>,
    /// MPS file, relative to the manifest directory.
    pub path: Option<PathBuf>,
    /// Name of a bundled fixture.
    pub fixture: Option<String>,
    #[serde(default)]
    pub class: String,
    pub reference: Option<f64>,
}

impl InstanceEntry {
    pub fn file(path: impl Into<PathBuf>) -> Self {
        InstanceEntry {
            name: None,
            path: Some(path.into()),
            fixture: None,
            class: String::new(),
            reference: None,
        }
    }

    pub fn fixture(name: &str) -> Self {
        InstanceEntry {
            name: None,
            path: None,
            fixture: Some(name.to_string()),
            class: String::new(),
            reference: None,
        }
    }

    pub fn display_name(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        if let Some(f) = &self.fixture {
            return f.clone();
        }
        let p = self.path.as_deref().unwrap_or(Path::new("unnamed"));
        let stem = p.file_name().and_then(|s| s.to_str()).unwrap_or("unnamed");
        stem.trim_end_matches(".gz").trim_end_matches(".mps").trim_end_matches(".MPS").to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seeds: Vec<u64>,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    /// Sidecar of `name value` reference objectives.
    pub references: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, rename = "instance")]
    pub instances: Vec<InstanceEntry>,
}

fn default_variants() -> Vec<Variant> {
    vec![Variant::AFP2]
}

impl Manifest {
    pub fn from_toml(text: &str) -> Result<Manifest, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Manifest(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Manifest, ExperimentError> {
        Manifest::from_toml(&fs::read_to_string(path)?)
    }

    /// The bundled fixture suite as a manifest.
    pub fn fixture_suite(seeds: Vec<u64>, variants: Vec<Variant>, solver: SolverConfig) -> Manifest {
        Manifest {
            seeds,
            variants,
            references: None,
            solver,
            instances: fixtures::suite()
                .iter()
                .map(|f| InstanceEntry::fixture(f.instance.name()))
                .collect(),
        }
    }
}

/// Parses a reference sidecar: one `name value` pair per line, `#` comments.
pub fn parse_references(text: &str) -> Result<BTreeMap<String, f64>, ExperimentError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(name), Some(val), None) = (it.next(), it.next(), it.next()) else {
            return Err(ExperimentError::References {
                line: i + 1,
                msg: "expected `name value`".into(),
            });
        };
        let v: f64 = val.parse().map_err(|_| ExperimentError::References {
            line: i + 1,
            msg: format!("bad number `{val}`"),
        })?;
        out.insert(name.to_string(), v);
    }
    Ok(out)
}

/// Reads an instance file. The default loader handles plain MPS only.
pub type Loader<'a> = dyn Fn(&Path) -> Result<MipInstance, String> + Sync + 'a;

pub fn load_plain_mps(path: &Path) -> Result<MipInstance, String> {
    let f = fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    crate::mps::parse_mps(std::io::BufReader::new(f)).map_err(|e| format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub parallel: bool,
    pub record_events: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            parallel: cfg!(feature = "parallel"),
            record_events: false,
        }
    }
}

/// One run inside a seeded solve, flattened for `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub instance: String,
    pub variant: String,
    pub seed: u64,
    pub run: usize,
    pub phase: Phase,
    pub iterations: usize,
    pub stop: StopReason,
    pub success: bool,
    pub objective: Option<f64>,
    pub final_fractionality: f64,
    pub hard_size: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct EventLog {
    pub instance: String,
    pub variant: Variant,
    pub seed: u64,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, Serialize)]
struct LoggedEvent<'a> {
    seed: u64,
    #[serde(flatten)]
    event: &'a Event,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentResult {
    pub rows: Vec<MetricsRow>,
    pub timing: Vec<TimingRow>,
    pub seeds: Vec<SeedRecord>,
    pub runs: Vec<RunRow>,
    pub events: Vec<EventLog>,
    /// `(instance, message)` for every instance that could not be executed.
    pub errors: Vec<(String, String)>,
}

impl ExperimentResult {
    /// True when every instance was loaded and its relaxation solved.
    pub fn all_executed(&self) -> bool {
        self.errors.is_empty()
    }
}

struct Prepared {
    name: String,
    class: String,
    reference: Option<f64>,
    instance: Result<MipInstance, String>,
}

struct Job {
    inst: usize,
    variant: Variant,
    seed: u64,
}

struct JobOutput {
    record: SeedRecord,
    runs: Vec<RunRow>,
    events: Vec<Event>,
    relaxation: LpStatus,
}

fn run_job(p: &Prepared, job: &Job, cfg: &SolverConfig) -> JobOutput {
    let inst = p.instance.as_ref().expect("jobs are built for loaded instances");
    let rep = job.variant.solve(inst, cfg, job.seed);
    let variant = job.variant.to_string();
    debug_assert!(rep.best.as_ref().is_none_or(|b| inst.is_mip_feasible(&b.point, &cfg.tol)));
    let runs = rep
        .runs
        .iter()
        .map(|r| RunRow {
            instance: p.name.clone(),
            variant: variant.clone(),
            seed: job.seed,
            run: r.run,
            phase: r.phase,
            iterations: r.iterations,
            stop: r.stop,
            success: r.success,
            objective: r.objective,
            final_fractionality: r.final_fractionality,
            hard_size: r.hard_set.as_ref().map(Vec::len),
        })
        .collect();
    let record = SeedRecord {
        instance: p.name.clone(),
        variant,
        seed: job.seed,
        feasible: rep.feasible(),
        objective: rep.best.as_ref().map(|b| b.objective),
        iterations: rep.iterations,
        runs: rep.runs.len(),
        successful_runs: rep.successful_runs(),
        run_seconds: rep.runs.iter().map(|r| r.seconds).collect(),
        successful_run_seconds: rep.runs.iter().filter(|r| r.success).map(|r| r.seconds).collect(),
        seconds: rep.seconds,
    };
    JobOutput {
        record,
        runs,
        events: rep.events,
        relaxation: rep.relaxation,
    }
}

fn run_jobs_sequential(prepared: &[Prepared], jobs: &[Job], cfg: &SolverConfig) -> Vec<JobOutput> {
    jobs.iter().map(|j| run_job(&prepared[j.inst], j, cfg)).collect()
}

#[cfg(feature = "parallel")]
fn run_jobs_parallel(prepared: &[Prepared], jobs: &[Job], cfg: &SolverConfig) -> Vec<JobOutput> {
    use rayon::prelude::*;
    jobs.par_iter().map(|j| run_job(&prepared[j.inst], j, cfg)).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_jobs_parallel(prepared: &[Prepared], jobs: &[Job], cfg: &SolverConfig) -> Vec<JobOutput> {
    run_jobs_sequential(prepared, jobs, cfg)
}

/// Runs every (instance, variant, seed) job. Instances are loaded before any
/// solve starts, so solve times exclude parsing. Paths are resolved against
/// `base_dir`. Load and relaxation failures are recorded, not raised.
pub fn run_experiment(
    manifest: &Manifest,
    base_dir: &Path,
    loader: &Loader<'_>,
    opts: RunOptions,
) -> Result<ExperimentResult, ExperimentError> {
    let sidecar = match &manifest.references {
        Some(p) => parse_references(&fs::read_to_string(base_dir.join(p))?)?,
        None => BTreeMap::new(),
    };
    let prepared: Vec<Prepared> = manifest
        .instances
        .iter()
        .map(|e| {
            let name = e.display_name();
            let instance = match (&e.path, &e.fixture) {
                (Some(p), None) => loader(&base_dir.join(p)),
                (None, Some(f)) => fixtures::by_name(f)
                    .map(|f| f.instance)
                    .ok_or_else(|| format!("unknown fixture `{f}`")),
                _ => Err("entry needs exactly one of `path` or `fixture`".to_string()),
            };
            Prepared {
                reference: e.reference.or_else(|| sidecar.get(&name).copied()),
                class: e.class.clone(),
                name,
                instance,
            }
        })
        .collect();

    let mut cfg = manifest.solver.clone();
    cfg.record_events |= opts.record_events;
    let mut jobs = Vec::new();
    for (i, p) in prepared.iter().enumerate() {
        if p.instance.is_err() {
            continue;
        }
        for &variant in &manifest.variants {
            for &seed in &manifest.seeds {
                jobs.push(Job { inst: i, variant, seed });
            }
        }
    }
    let outputs = if opts.parallel {
        run_jobs_parallel(&prepared, &jobs, &cfg)
    } else {
        run_jobs_sequential(&prepared, &jobs, &cfg)
    };

    let mut result = ExperimentResult::default();
    let mut by_key: BTreeMap<(usize, Variant), Vec<SeedRecord>> = BTreeMap::new();
    let mut lp_failure: BTreeMap<usize, LpStatus> = BTreeMap::new();
    for (job, out) in jobs.iter().zip(outputs) {
        if out.relaxation != LpStatus::Optimal {
            lp_failure.insert(job.inst, out.relaxation);
        }
        result.runs.extend(out.runs);
        if opts.record_events {
            result.events.push(EventLog {
                instance: prepared[job.inst].name.clone(),
                variant: job.variant,
                seed: job.seed,
                events: out.events,
            });
        }
        by_key.entry((job.inst, job.variant)).or_default().push(out.record);
    }
    for (i, p) in prepared.iter().enumerate() {
        let error = match (&p.instance, lp_failure.get(&i)) {
            (Err(e), _) => Some(e.clone()),
            (Ok(_), Some(s)) => Some(format!("relaxation {s:?}")),
            _ => None,
        };
        if let Some(e) = &error {
            result.errors.push((p.name.clone(), e.clone()));
        }
        let maximize = p.instance.as_ref().is_ok_and(|m| m.sense() == ObjSense::Maximize);
        for &variant in &manifest.variants {
            let records = by_key.remove(&(i, variant)).unwrap_or_default();
            let (mut row, timing) = aggregate(&p.name, &p.class, &variant.to_string(), &records, p.reference, maximize);
            // success denominators are the requested seeds even when nothing ran
            row.seeds = manifest.seeds.len();
            row.success = if row.seeds == 0 { 0.0 } else { row.feasible_seeds as f64 / row.seeds as f64 };
            row.error = error.clone();
            result.rows.push(row);
            result.timing.push(timing);
            result.seeds.extend(records);
        }
    }
    Ok(result)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SeedRow<'a> {
    instance: &'a str,
    variant: &'a str,
    seed: u64,
    feasible: bool,
    objective: Option<f64>,
    iterations: usize,
    runs: usize,
    successful_runs: usize,
}

#[derive(Serialize)]
struct Summary<'a> {
    schema_version: u32,
    all_executed: bool,
    errors: Vec<ErrorEntry<'a>>,
    results: &'a [MetricsRow],
}

#[derive(Serialize)]
struct ErrorEntry<'a> {
    instance: &'a str,
    error: &'a str,
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

/// Writes `results.csv`, `seeds.csv`, `runs.csv`, `timing.csv`,
/// `summary.json` and, when events were recorded, one JSONL log per
/// instance and variant under `events/`. Everything except `timing.csv` is
/// a deterministic function of the manifest.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir)?;
    write_csv(&dir.join("results.csv"), &result.rows)?;
    let seeds: Vec<SeedRow> = result
        .seeds
        .iter()
        .map(|s| SeedRow {
            instance: &s.instance,
            variant: &s.variant,
            seed: s.seed,
            feasible: s.feasible,
            objective: s.objective,
            iterations: s.iterations,
            runs: s.runs,
            successful_runs: s.successful_runs,
        })
        .collect();
    write_csv(&dir.join("seeds.csv"), &seeds)?;
    write_csv(&dir.join("runs.csv"), &result.runs)?;
    write_csv(&dir.join("timing.csv"), &result.timing)?;
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        all_executed: result.all_executed(),
        errors: result
            .errors
            .iter()
            .map(|(i, e)| ErrorEntry { instance: i, error: e })
            .collect(),
        results: &result.rows,
    };
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    if !result.events.is_empty() {
        let edir = dir.join("events");
        fs::create_dir_all(&edir)?;
        let mut files: BTreeMap<String, BufWriter<fs::File>> = BTreeMap::new();
        for log in &result.events {
            let fname = format!("{}__{}.jsonl", file_safe(&log.instance), log.variant);
            if !files.contains_key(&fname) {
                files.insert(fname.clone(), BufWriter::new(fs::File::create(edir.join(&fname))?));
            }
            let w = files.get_mut(&fname).expect("just inserted");
            for e in &log.events {
                serde_json::to_writer(&mut *w, &LoggedEvent { seed: log.seed, event: e })?;
                w.write_all(b"\n")?;
            }
        }
        for (_, mut w) in files {
            w.flush()?;
        }
    }
    Ok(())
}

/// Reads a `results.csv` written by [`write_outputs`].
pub fn read_results(path: &Path) -> Result<Vec<MetricsRow>, ExperimentError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Reads one JSONL event log; the seed of each line is returned with it.
pub fn read_events(text: &str) -> Result<Vec<(u64, Event)>, ExperimentError> {
    #[derive(Deserialize)]
    struct Line {
        seed: u64,
        #[serde(flatten)]
        event: Event,
    }
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let l: Line = serde_json::from_str(line)?;
        out.push((l.seed, l.event));
    }
    Ok(out)
}
