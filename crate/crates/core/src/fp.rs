//! Classic feasibility pump: round, project, and perturb on cycles.

use std::collections::HashSet;

use crate::engine::{certify, solve_single, Engine, Event, RunContext, RunOutcome, SolveReport, SolverConfig, Stagnation, StopReason};
use crate::lp::Basis;
use crate::model::{MipInstance, Point, SolutionPair};
use crate::moves::{apply_move, randomized_round, MoveKind};
use crate::projection::{advance_alpha, Projector};
use crate::rng::RunRng;

/// Every run restarts from the relaxation optimum; only the last LP basis
/// carries over between runs.
#[derive(Debug, Default, Clone)]
pub struct FpEngine {
    warm: Option<Basis>,
}

fn key(p: &Point, active: &[usize]) -> Vec<i64> {
    active.iter().map(|&i| p[i].round() as i64).collect()
}

impl Engine for FpEngine {
    fn run(&mut self, ctx: &RunContext<'_>, rng: &mut RunRng, events: &mut Vec<Event>) -> RunOutcome {
        let (out, warm) = fp_run(ctx, self.warm.take(), rng, events);
        self.warm = warm;
        out
    }
}

/// One pump run. Cycles of length one trigger a weak perturbation, longer
/// cycles a strong one; binary moves on all-binary active sets, domain moves
/// otherwise.
pub fn fp_run(
    ctx: &RunContext<'_>,
    warm: Option<Basis>,
    rng: &mut RunRng,
    events: &mut Vec<Event>,
) -> (RunOutcome, Option<Basis>) {
    let cfg = ctx.cfg;
    let inst = ctx.inst;
    let active = ctx.active;
    let pcfg = cfg.projection(Some(ctx.z_star));
    let (weak, strong) = if active.iter().all(|&i| inst.is_binary(i)) {
        (MoveKind::WeakPerturbation, MoveKind::StrongPerturbation)
    } else {
        (MoveKind::WeakPerturbationDomain, MoveKind::StrongPerturbationDomain)
    };
    let mut projector = Projector::new(inst, active, &pcfg).with_warm(warm);
    let mut pair = SolutionPair::new(inst, ctx.start.clone(), ctx.start.clone(), active);
    macro_rules! finish {
        ($pair:expr, $solution:expr, $iterations:expr, $stop:expr) => {
            return (
                RunOutcome {
                    solution: $solution,
                    last: $pair,
                    iterations: $iterations,
                    stop: $stop,
                },
                projector.into_warm(),
            )
        };
    }
    if pair.is_integral_on(active, cfg.tol.int) {
        if let Some(p) = certify(inst, &pair, active, &cfg.tol) {
            finish!(pair, Some(p), 0, StopReason::Feasible);
        }
    }
    let mut alpha = cfg.alpha0;
    let mut visited: HashSet<Vec<i64>> = HashSet::new();
    let mut previous: Option<Vec<i64>> = None;
    let mut stag = Stagnation::new(f64::INFINITY, cfg.tol.int);
    let mut iter = 0;
    loop {
        if iter >= ctx.max_iters {
            let stop = if ctx.max_iters < cfg.budget.n_r { StopReason::Budget } else { StopReason::RunLimit };
            finish!(pair, None, iter, stop);
        }
        if ctx.timed_out() {
            finish!(pair, None, iter, StopReason::TimeLimit);
        }
        let rounded = randomized_round(inst, &pair.relaxed, active, &cfg.moves, rng);
        let mut kind = MoveKind::RandomizedRounding;
        let mut target = rounded.point;
        let k = key(&target, active);
        if visited.contains(&k) {
            let cycle_one = previous.as_ref() == Some(&k);
            let rounded_pair = SolutionPair::new(inst, pair.relaxed.clone(), target, active);
            let (applied, prop) = apply_move(if cycle_one { weak } else { strong }, inst, &rounded_pair, active, &cfg.moves, rng);
            kind = applied;
            target = prop.point;
        }
        let k = key(&target, active);
        visited.insert(k.clone());
        previous = Some(k);
        let rounded_pair = SolutionPair::new(inst, pair.relaxed.clone(), target.clone(), active);
        if let Some(p) = certify(inst, &rounded_pair, active, &cfg.tol) {
            finish!(rounded_pair, Some(p), iter + 1, StopReason::Feasible);
        }
        let proj = match projector.project(&target, alpha) {
            Ok(p) => p,
            Err(_) => finish!(pair, None, iter, StopReason::LpFailure),
        };
        iter += 1;
        let delta = proj.pair.fractionality - pair.fractionality;
        pair = proj.pair;
        if cfg.record_events {
            events.push(Event {
                run: ctx.run,
                iter,
                phase: ctx.phase,
                alpha,
                move_kind: Some(kind),
                delta_raw: delta,
                delta_norm: delta,
                accepted: true,
                fractionality: pair.fractionality,
                quality: pair.objective_value,
                hard_size: ctx.hard_size,
            });
        }
        alpha = advance_alpha(alpha, &pcfg);
        if let Some(p) = certify(inst, &pair, active, &cfg.tol) {
            finish!(pair, Some(p), iter, StopReason::Feasible);
        }
        if stag.observe(pair.fractionality) >= cfg.budget.k {
            finish!(pair, None, iter, StopReason::Stagnation);
        }
    }
}

/// Runs the pump under the global budget with seeded per-run streams.
pub fn fp_solve(inst: &MipInstance, cfg: &SolverConfig, seed: u64) -> SolveReport {
    solve_single(inst, cfg, seed, &mut FpEngine::default())
}
