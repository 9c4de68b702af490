//! Configuration, reports and the run loop shared by the pump engines.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::lp::{solve_relaxation, LpStatus};
use crate::model::{MipInstance, Point, SolutionPair, Tolerances};
use crate::moves::{MoveKind, MoveParams};
use crate::projection::{ProjectionConfig, QualityNorm};
use crate::rng::{run_rng, RunRng};

/// Iteration budgets: `n_t` over the whole solve, `n_r` per run, and `k`
/// iterations without fractionality improvement before a run stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    pub n_t: usize,
    pub n_r: usize,
    pub k: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            n_t: 5000,
            n_r: 150,
            k: 70,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub budget: Budget,
    pub alpha0: f64,
    pub alpha_decay: f64,
    pub quality_norm: QualityNorm,
    pub moves: MoveParams,
    /// Moves offered by the annealed pump; binary-only entries are skipped
    /// on active sets with general integers.
    pub move_list: Vec<MoveKind>,
    pub tol: Tolerances,
    /// Initial probability of accepting the worst move at `alpha_h`.
    pub p_h: f64,
    pub alpha_h: f64,
    /// When false, the acceptance normaliser stays at 1 for the whole solve.
    pub normalize_delta: bool,
    pub record_events: bool,
    /// Wall-clock limit for one solve.
    pub time_limit: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            budget: Budget::default(),
            alpha0: 1.0,
            alpha_decay: 0.9,
            quality_norm: QualityNorm::RelaxedOptimum,
            moves: MoveParams::default(),
            move_list: MoveKind::DEFAULT_LIST.to_vec(),
            tol: Tolerances::default(),
            p_h: 0.7,
            alpha_h: 1.0,
            normalize_delta: true,
            record_events: false,
            time_limit: None,
        }
    }
}

impl SolverConfig {
    pub fn projection(&self, z_star: Option<f64>) -> ProjectionConfig {
        ProjectionConfig {
            alpha0: self.alpha0,
            alpha_decay: self.alpha_decay,
            quality_norm: self.quality_norm,
            z_star,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Single,
    Bootstrap,
    Stage1,
    Stage2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Feasible,
    RunLimit,
    Stagnation,
    Budget,
    TimeLimit,
    LpFailure,
    /// Stage-2 relaxation infeasible after fixing the hard set.
    FixingInfeasible,
}

/// One candidate evaluation or iteration of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub run: usize,
    pub iter: usize,
    pub phase: Phase,
    pub alpha: f64,
    #[serde(rename = "move")]
    pub move_kind: Option<MoveKind>,
    pub delta_raw: f64,
    pub delta_norm: f64,
    pub accepted: bool,
    /// Fractionality of the current pair after this event.
    pub fractionality: f64,
    /// `c·x̄` of the candidate in minimisation form.
    pub quality: f64,
    pub hard_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run: usize,
    pub phase: Phase,
    pub iterations: usize,
    pub stop: StopReason,
    /// Success of the run on its own active set.
    pub success: bool,
    /// Objective in the instance's own sense when the run produced a
    /// certified MIP-feasible point.
    pub objective: Option<f64>,
    pub final_fractionality: f64,
    /// Hard set of a stage run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hard_set: Option<Vec<usize>>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub point: Vec<f64>,
    /// Objective in the instance's own sense, offset included.
    pub objective: f64,
    #[serde(skip)]
    min_form: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub relaxation: LpStatus,
    pub z_star: Option<f64>,
    pub runs: Vec<RunReport>,
    pub best: Option<Solution>,
    pub iterations: usize,
    pub seconds: f64,
    #[serde(skip)]
    pub events: Vec<Event>,
}

impl SolveReport {
    pub fn feasible(&self) -> bool {
        self.best.is_some()
    }

    pub fn successful_runs(&self) -> usize {
        self.runs.iter().filter(|r| r.success).count()
    }

    /// Records a certified point, keeping the best; returns its objective.
    pub(crate) fn offer(&mut self, inst: &MipInstance, p: &[f64]) -> f64 {
        let min_form = inst.linear_objective(p);
        let objective = inst.reported_objective(p);
        if self.best.as_ref().is_none_or(|b| min_form < b.min_form) {
            self.best = Some(Solution {
                point: p.to_vec(),
                objective,
                min_form,
            });
        }
        objective
    }
}

/// Everything a single run needs.
pub struct RunContext<'a> {
    pub inst: &'a MipInstance,
    pub active: &'a [usize],
    /// Optimal point of the relaxation of `inst`.
    pub start: &'a Point,
    pub z_star: f64,
    pub cfg: &'a SolverConfig,
    pub run: usize,
    pub phase: Phase,
    pub max_iters: usize,
    pub deadline: Option<Instant>,
    pub hard_size: Option<usize>,
}

impl RunContext<'_> {
    pub(crate) fn timed_out(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

pub struct RunOutcome {
    /// A point feasible for `inst` and integral on the active set.
    pub solution: Option<Point>,
    pub last: SolutionPair,
    pub iterations: usize,
    pub stop: StopReason,
}

/// A pump variant as seen by the solve drivers: runs plus any state kept
/// from one run to the next.
pub trait Engine {
    fn run(&mut self, ctx: &RunContext<'_>, rng: &mut RunRng, events: &mut Vec<Event>) -> RunOutcome;
    /// Called after every run with its success flag.
    fn end_run(&mut self, _success: bool) {}
}

/// Candidate solution found by a projection: `x̄` snapped on the active set
/// if it is integral there, else `x̃` completed with the continuous part of
/// `x̄`, whichever passes the feasibility test first.
pub(crate) fn certify(inst: &MipInstance, pair: &SolutionPair, active: &[usize], tol: &Tolerances) -> Option<Point> {
    if pair.is_integral_on(active, tol.int) {
        let snapped = pair.snapped(active);
        if inst.is_feasible_on(&snapped, active, tol) {
            return Some(snapped);
        }
    }
    let mut cand = pair.relaxed.clone();
    {
        let v = cand.values_mut();
        for &i in active {
            v[i] = pair.integral[i];
        }
    }
    if inst.is_feasible_on(&cand, active, tol) {
        Some(cand)
    } else {
        None
    }
}

/// Tracks the `k`-stagnation rule on the run-best fractionality.
pub(crate) struct Stagnation {
    best: f64,
    stall: usize,
    eps: f64,
}

impl Stagnation {
    pub fn new(initial: f64, eps: f64) -> Self {
        Stagnation {
            best: initial,
            stall: 0,
            eps,
        }
    }

    /// Records a fractionality value; returns the number of iterations since
    /// the last strict improvement.
    pub fn observe(&mut self, frac: f64) -> usize {
        if frac < self.best - self.eps {
            self.best = frac;
            self.stall = 0;
        } else {
            self.stall += 1;
        }
        self.stall
    }
}

pub(crate) struct Relaxation {
    pub status: LpStatus,
    pub point: Option<Point>,
    pub z_star: Option<f64>,
}

pub(crate) fn relax(inst: &MipInstance) -> Relaxation {
    let sol = solve_relaxation(inst);
    let z = sol.is_optimal().then_some(sol.objective);
    Relaxation {
        status: sol.status,
        point: sol.point,
        z_star: z,
    }
}

pub(crate) fn deadline(cfg: &SolverConfig, started: Instant) -> Option<Instant> {
    cfg.time_limit.map(|s| started + Duration::from_secs_f64(s.max(0.0)))
}

pub(crate) fn empty_report(status: LpStatus, z_star: Option<f64>) -> SolveReport {
    SolveReport {
        relaxation: status,
        z_star,
        runs: Vec::new(),
        best: None,
        iterations: 0,
        seconds: 0.0,
        events: Vec::new(),
    }
}

/// Single-stage solve: repeat runs over the full integer set until the
/// global budget is spent. Each run is charged at least one iteration.
pub fn solve_single<E: Engine>(inst: &MipInstance, cfg: &SolverConfig, seed: u64, engine: &mut E) -> SolveReport {
    let started = Instant::now();
    let relax = relax(inst);
    let mut report = empty_report(relax.status, relax.z_star);
    let Some(start) = relax.point else {
        report.seconds = started.elapsed().as_secs_f64();
        return report;
    };
    let active = inst.integer_vars();
    if active.is_empty() {
        if inst.is_mip_feasible(&start, &cfg.tol) {
            report.offer(inst, &start);
        }
        report.seconds = started.elapsed().as_secs_f64();
        return report;
    }
    let dl = deadline(cfg, started);
    let mut run = 0;
    while report.iterations < cfg.budget.n_t {
        if dl.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        let ctx = RunContext {
            inst,
            active,
            start: &start,
            z_star: relax.z_star.unwrap_or(0.0),
            cfg,
            run,
            phase: Phase::Single,
            max_iters: cfg.budget.n_r.min(cfg.budget.n_t - report.iterations),
            deadline: dl,
            hard_size: None,
        };
        let t0 = Instant::now();
        let mut rng = run_rng(seed, run as u64);
        let out = engine.run(&ctx, &mut rng, &mut report.events);
        let objective = out.solution.as_ref().map(|p| report.offer(inst, p));
        engine.end_run(out.solution.is_some());
        report.iterations += out.iterations.max(1);
        report.runs.push(RunReport {
            run,
            phase: Phase::Single,
            iterations: out.iterations,
            stop: out.stop,
            success: out.solution.is_some(),
            objective,
            final_fractionality: out.last.fractionality,
            hard_set: None,
            seconds: t0.elapsed().as_secs_f64(),
        });
        run += 1;
    }
    report.seconds = started.elapsed().as_secs_f64();
    report
}
