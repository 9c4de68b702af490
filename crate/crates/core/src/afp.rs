//! Annealed feasibility pump: pair transitions over a move list, accepted by
//! a Metropolis test on the change in fractionality.
//!
//! The change `Δd` is divided by a normaliser `‖Δd‖` before entering the
//! exponent. `‖Δd‖` starts at 1; after each run it is set so that the worst
//! move seen in the first run would be accepted with probability `p_h` at
//! temperature `α_h`. `p_h` shrinks after successful runs and grows after
//! failed ones.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::engine::{certify, solve_single, Engine, Event, RunContext, RunOutcome, SolveReport, SolverConfig, Stagnation, StopReason};
use crate::lp::Basis;
use crate::model::{MipInstance, Point};
use crate::moves::{apply_move, usable_moves};
use crate::projection::{advance_alpha, Projector};
use crate::rng::RunRng;

/// Probability that the Metropolis test accepts a change `delta`.
pub fn acceptance_probability(delta: f64, alpha: f64, delta_norm: f64) -> f64 {
    if delta <= 0.0 {
        1.0
    } else if alpha <= 0.0 {
        0.0
    } else {
        (-(delta / delta_norm) / alpha).exp()
    }
}

pub fn metropolis_accept<R: Rng + ?Sized>(delta: f64, alpha: f64, delta_norm: f64, rng: &mut R) -> bool {
    if delta <= 0.0 {
        return true;
    }
    if alpha <= 0.0 {
        return false;
    }
    rng.gen::<f64>() <= acceptance_probability(delta, alpha, delta_norm)
}

/// Solves `exp(-Δd_max / (‖Δd‖ α_h)) = p_h` for `‖Δd‖`; 1 when no worsening
/// move has been seen.
pub fn calibrate_delta_norm(delta_max: f64, alpha_h: f64, p_h: f64) -> f64 {
    if delta_max <= 0.0 {
        return 1.0;
    }
    delta_max / (alpha_h * -p_h.ln())
}

pub fn update_ph(p_h: f64, feasible_found: bool) -> f64 {
    if feasible_found {
        0.9 * p_h
    } else {
        p_h.sqrt()
    }
}

/// Annealing state carried from run to run within one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealState {
    pub alpha_h: f64,
    pub p_h: f64,
    pub delta_norm: f64,
    /// Largest worsening seen while calibrating.
    pub delta_max: f64,
    pub normalize: bool,
}

impl AnnealState {
    pub fn new(cfg: &SolverConfig) -> Self {
        AnnealState {
            alpha_h: cfg.alpha_h,
            p_h: cfg.p_h,
            delta_norm: 1.0,
            delta_max: 0.0,
            normalize: cfg.normalize_delta,
        }
    }

    /// Worsening moves are tracked until one has been seen.
    pub fn calibrating(&self) -> bool {
        self.delta_max <= 0.0
    }

    /// End-of-run update: move `p_h`, then recalibrate with the new value.
    pub fn end_run(&mut self, feasible_found: bool) {
        self.p_h = update_ph(self.p_h, feasible_found);
        if self.normalize {
            self.delta_norm = calibrate_delta_norm(self.delta_max, self.alpha_h, self.p_h);
        }
    }
}

#[derive(Debug, Clone)]
pub struct AfpEngine {
    pub state: AnnealState,
    warm: Option<Basis>,
}

impl AfpEngine {
    pub fn new(cfg: &SolverConfig) -> Self {
        AfpEngine {
            state: AnnealState::new(cfg),
            warm: None,
        }
    }
}

impl Engine for AfpEngine {
    fn run(&mut self, ctx: &RunContext<'_>, rng: &mut RunRng, events: &mut Vec<Event>) -> RunOutcome {
        let (out, warm) = afp_run(ctx, &mut self.state, self.warm.take(), rng, events);
        self.warm = warm;
        out
    }

    fn end_run(&mut self, success: bool) {
        self.state.end_run(success);
    }
}

/// Random integer point on `active` with the remaining coordinates of `start`.
pub fn random_initial<R: Rng + ?Sized>(inst: &MipInstance, start: &Point, active: &[usize], rng: &mut R) -> Point {
    let mut v = start.to_vec();
    for &i in active {
        let lo = inst.lower()[i].ceil() as i64;
        let hi = inst.upper()[i].floor() as i64;
        v[i] = rng.gen_range(lo..=hi) as f64;
    }
    Point::new(v).expect("integer bounds are finite")
}

/// One annealed run.
pub fn afp_run(
    ctx: &RunContext<'_>,
    state: &mut AnnealState,
    warm: Option<Basis>,
    rng: &mut RunRng,
    events: &mut Vec<Event>,
) -> (RunOutcome, Option<Basis>) {
    let cfg = ctx.cfg;
    let inst = ctx.inst;
    let active = ctx.active;
    let pcfg = cfg.projection(Some(ctx.z_star));
    let mut projector = Projector::new(inst, active, &pcfg).with_warm(warm);
    let mut alpha = cfg.alpha0;
    let x0 = random_initial(inst, ctx.start, active, rng);
    let first = projector.project(&x0, alpha);
    let mut pair = match first {
        Ok(p) => p.pair,
        Err(_) => {
            let pair = crate::model::SolutionPair::new(inst, ctx.start.clone(), x0, active);
            let out = RunOutcome {
                solution: None,
                last: pair,
                iterations: 0,
                stop: StopReason::LpFailure,
            };
            return (out, projector.into_warm());
        }
    };
    macro_rules! finish {
        ($solution:expr, $iterations:expr, $stop:expr) => {
            return (
                RunOutcome {
                    solution: $solution,
                    last: pair,
                    iterations: $iterations,
                    stop: $stop,
                },
                projector.into_warm(),
            )
        };
    }
    if let Some(p) = certify(inst, &pair, active, &cfg.tol) {
        finish!(Some(p), 0, StopReason::Feasible);
    }
    let mut moves = usable_moves(inst, active, &cfg.move_list);
    let track = state.calibrating();
    let mut stag = Stagnation::new(pair.fractionality, cfg.tol.int);
    let mut iter = 0;
    loop {
        if iter >= ctx.max_iters {
            let stop = if ctx.max_iters < cfg.budget.n_r { StopReason::Budget } else { StopReason::RunLimit };
            finish!(None, iter, stop);
        }
        if ctx.timed_out() {
            finish!(None, iter, StopReason::TimeLimit);
        }
        iter += 1;
        moves.shuffle(rng);
        for &kind in &moves {
            let (applied, prop) = apply_move(kind, inst, &pair, active, &cfg.moves, rng);
            let cand = match projector.project(&prop.point, alpha) {
                Ok(p) => p.pair,
                Err(_) => finish!(None, iter, StopReason::LpFailure),
            };
            let delta = cand.fractionality - pair.fractionality;
            if track && delta > state.delta_max {
                state.delta_max = delta;
            }
            let found = certify(inst, &cand, active, &cfg.tol);
            let accepted = found.is_some() || metropolis_accept(delta, alpha, state.delta_norm, rng);
            if cfg.record_events {
                events.push(Event {
                    run: ctx.run,
                    iter,
                    phase: ctx.phase,
                    alpha,
                    move_kind: Some(applied),
                    delta_raw: delta,
                    delta_norm: delta / state.delta_norm,
                    accepted,
                    fractionality: if accepted { cand.fractionality } else { pair.fractionality },
                    quality: cand.objective_value,
                    hard_size: ctx.hard_size,
                });
            }
            if accepted {
                pair = cand;
                if found.is_some() {
                    finish!(found, iter, StopReason::Feasible);
                }
                break;
            }
        }
        alpha = advance_alpha(alpha, &pcfg);
        if stag.observe(pair.fractionality) >= cfg.budget.k {
            finish!(None, iter, StopReason::Stagnation);
        }
    }
}

/// Single-stage annealed pump under the global budget.
pub fn afp_solve(inst: &MipInstance, cfg: &SolverConfig, seed: u64) -> SolveReport {
    solve_single(inst, cfg, seed, &mut AfpEngine::new(cfg))
}
