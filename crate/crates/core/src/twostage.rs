//! Two-stage solving with hard-variable fixing.
//!
//! Each integer variable carries a rank counting how often it ended a failed
//! run fractional. The `n_h` highest-ranked variables form the hard set `H`.
//! Stage 1 enforces integrality on `H` only; stage 2 fixes `H` at the
//! stage-1 values and enforces integrality on the rest. `n_h` shrinks by 0.8
//! after a failed stage 1 or a successful stage 2, and grows by 1.2 after a
//! failed stage 2.

use std::time::Instant;

use crate::afp::AfpEngine;
use crate::engine::{
    deadline, empty_report, relax, Engine, Phase, RunContext, RunReport, SolveReport, SolverConfig, StopReason,
};
use crate::fp::FpEngine;
use crate::model::{is_integral, MipInstance, Point};
use crate::rng::run_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOutcome {
    Stage1Infeasible,
    Stage2Infeasible,
    Stage2Feasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardFixState {
    /// Rank per variable index; always 0 for continuous variables.
    pub ranks: Vec<u64>,
    integer: Vec<usize>,
    pub hard: Vec<usize>,
    pub n_h: usize,
}

impl HardFixState {
    pub fn new(inst: &MipInstance) -> Self {
        HardFixState {
            ranks: vec![0; inst.num_vars()],
            integer: inst.integer_vars().to_vec(),
            hard: Vec::new(),
            n_h: 0,
        }
    }

    /// Increments the rank of every integer variable fractional in `relaxed`.
    pub fn update_ranks(&mut self, relaxed: &[f64], eps_int: f64) {
        for &i in &self.integer {
            if !is_integral(relaxed[i], eps_int) {
                self.ranks[i] += 1;
            }
        }
    }

    /// Starts the stage loop with every positively ranked variable hard.
    /// Returns false, leaving `H` empty, when no rank is positive.
    pub fn init_hard_set(&mut self) -> bool {
        self.hard = self.integer.iter().copied().filter(|&i| self.ranks[i] > 0).collect();
        self.n_h = self.hard.len();
        self.n_h > 0
    }

    /// The `n_h` highest ranks, ties by ascending index, returned sorted.
    fn select(&mut self) {
        let mut order = self.integer.clone();
        order.sort_by(|&a, &b| self.ranks[b].cmp(&self.ranks[a]).then(a.cmp(&b)));
        order.truncate(self.n_h);
        order.sort_unstable();
        self.hard = order;
    }

    /// Applies the resize rule for `outcome`, then reselects `H`. Returns
    /// false, clearing `H`, when every rank is still zero.
    pub fn resize(&mut self, outcome: StageOutcome) -> bool {
        let n = self.n_h.max(1);
        self.n_h = match outcome {
            StageOutcome::Stage1Infeasible | StageOutcome::Stage2Feasible => (4 * n).div_ceil(5),
            StageOutcome::Stage2Infeasible => (6 * n).div_ceil(5).min(self.integer.len()),
        }
        .max(1);
        if self.integer.iter().all(|&i| self.ranks[i] == 0) {
            self.hard.clear();
            self.n_h = 0;
            return false;
        }
        self.select();
        true
    }
}

struct Driver<'a, E: Engine> {
    inst: &'a MipInstance,
    cfg: &'a SolverConfig,
    seed: u64,
    engine: &'a mut E,
    report: SolveReport,
    run: usize,
    deadline: Option<Instant>,
}

struct StageRun {
    success: bool,
    solution: Option<Point>,
    relaxed: Vec<f64>,
}

impl<E: Engine> Driver<'_, E> {
    fn remaining(&self) -> usize {
        self.cfg.budget.n_t.saturating_sub(self.report.iterations)
    }

    fn exhausted(&self) -> bool {
        self.remaining() == 0 || self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn run_on(
        &mut self,
        inst: &MipInstance,
        active: &[usize],
        start: &Point,
        z_star: f64,
        phase: Phase,
        hard: Option<&[usize]>,
    ) -> StageRun {
        let ctx = RunContext {
            inst,
            active,
            start,
            z_star,
            cfg: self.cfg,
            run: self.run,
            phase,
            max_iters: self.cfg.budget.n_r.min(self.remaining()),
            deadline: self.deadline,
            hard_size: hard.map(<[usize]>::len),
        };
        let t0 = Instant::now();
        let mut rng = run_rng(self.seed, self.run as u64);
        let out = self.engine.run(&ctx, &mut rng, &mut self.report.events);
        let success = out.solution.is_some();
        self.engine.end_run(success);
        let certified = out
            .solution
            .as_ref()
            .filter(|p| self.inst.is_mip_feasible(p, &self.cfg.tol))
            .map(|p| p.to_vec());
        let objective = certified.as_ref().map(|p| self.report.offer(self.inst, p));
        self.report.iterations += out.iterations.max(1);
        self.report.runs.push(RunReport {
            run: self.run,
            phase,
            iterations: out.iterations,
            stop: out.stop,
            success,
            objective,
            final_fractionality: out.last.fractionality,
            hard_set: hard.map(<[usize]>::to_vec),
            seconds: t0.elapsed().as_secs_f64(),
        });
        self.run += 1;
        StageRun {
            success,
            solution: out.solution,
            relaxed: out.last.relaxed.into_vec(),
        }
    }

    /// Charges one iteration for a stage that could not start.
    fn record_skipped(&mut self, phase: Phase, stop: StopReason, hard: &[usize]) {
        self.report.iterations += 1;
        self.report.runs.push(RunReport {
            run: self.run,
            phase,
            iterations: 0,
            stop,
            success: false,
            objective: None,
            final_fractionality: f64::NAN,
            hard_set: Some(hard.to_vec()),
            seconds: 0.0,
        });
        self.run += 1;
    }
}

/// Two-stage solve driven by `engine`.
pub fn twostage_solve<E: Engine>(inst: &MipInstance, cfg: &SolverConfig, seed: u64, engine: &mut E) -> SolveReport {
    let started = Instant::now();
    let root = relax(inst);
    let mut report = empty_report(root.status, root.z_star);
    let Some(start) = root.point else {
        report.seconds = started.elapsed().as_secs_f64();
        return report;
    };
    if inst.integer_vars().is_empty() {
        if inst.is_mip_feasible(&start, &cfg.tol) {
            report.offer(inst, &start);
        }
        report.seconds = started.elapsed().as_secs_f64();
        return report;
    }
    let z_star = root.z_star.unwrap_or(0.0);
    let integer = inst.integer_vars().to_vec();
    let mut d = Driver {
        inst,
        cfg,
        seed,
        engine,
        report,
        run: 0,
        deadline: deadline(cfg, started),
    };
    let mut state = HardFixState::new(inst);
    let eps = cfg.tol.int;
    while !d.exhausted() {
        if state.n_h == 0 {
            let out = d.run_on(inst, &integer, &start, z_star, Phase::Bootstrap, None);
            if !out.success {
                state.update_ranks(&out.relaxed, eps);
                state.init_hard_set();
            }
            continue;
        }
        let hard = state.hard.clone();
        let s1 = d.run_on(inst, &hard, &start, z_star, Phase::Stage1, Some(&hard));
        let outcome = match s1.solution {
            None => {
                state.update_ranks(&s1.relaxed, eps);
                StageOutcome::Stage1Infeasible
            }
            Some(p) => {
                if d.exhausted() {
                    break;
                }
                let fixings: Vec<(usize, f64)> = hard.iter().map(|&i| (i, p[i].round())).collect();
                let fixed = inst.with_fixed(&fixings);
                let easy: Vec<usize> = integer.iter().copied().filter(|i| hard.binary_search(i).is_err()).collect();
                let sub = relax(&fixed);
                match sub.point {
                    None => {
                        d.record_skipped(Phase::Stage2, StopReason::FixingInfeasible, &hard);
                        StageOutcome::Stage2Infeasible
                    }
                    Some(sub_start) => {
                        let s2 = d.run_on(&fixed, &easy, &sub_start, sub.z_star.unwrap_or(0.0), Phase::Stage2, Some(&hard));
                        state.update_ranks(&s2.relaxed, eps);
                        let ok = s2.solution.is_some_and(|p| inst.is_mip_feasible(&p, &cfg.tol));
                        if ok {
                            StageOutcome::Stage2Feasible
                        } else {
                            StageOutcome::Stage2Infeasible
                        }
                    }
                }
            }
        };
        state.resize(outcome);
    }
    let mut report = d.report;
    report.seconds = started.elapsed().as_secs_f64();
    report
}

pub fn afp_twostage_solve(inst: &MipInstance, cfg: &SolverConfig, seed: u64) -> SolveReport {
    twostage_solve(inst, cfg, seed, &mut AfpEngine::new(cfg))
}

pub fn fp_twostage_solve(inst: &MipInstance, cfg: &SolverConfig, seed: u64) -> SolveReport {
    twostage_solve(inst, cfg, seed, &mut FpEngine::default())
}
