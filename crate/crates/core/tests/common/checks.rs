//! One function per acceptance criterion. Each returns a [`Check`] so the
//! acceptance runner can print every verdict before failing, and the topic
//! tests can assert the same properties on their own.

use std::path::{Path, PathBuf};
use std::time::Instant;

use afp_core::afp::{acceptance_probability, afp_solve, calibrate_delta_norm, metropolis_accept, update_ph, AnnealState};
use afp_core::bench::experiment::{load_plain_mps, write_outputs, InstanceEntry, Manifest, RunOptions, Variant};
use afp_core::bench::metrics::{aggregate, compute_gap, gap_opt, SeedRecord};
use afp_core::bench::run_experiment;
use afp_core::engine::{Budget, Phase, SolverConfig, StopReason};
use afp_core::fixtures::{self, suite};
use afp_core::lp::{solve_lp, LpStatus};
use afp_core::model::{MipBuilder, MipInstance, Point, RowSense, SolutionPair, VarKind};
use afp_core::moves::{
    randomized_round, strong_perturb_binary, strong_perturb_domain, weak_perturb_binary, weak_perturb_domain,
    MoveParams,
};
use afp_core::projection::{project, ProjectionConfig};
use afp_core::twostage::{afp_twostage_solve, HardFixState, StageOutcome};
use rand::prelude::*;

use super::{random_boxed_lp, rng, vertex_enumeration};

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str) -> Self {
        Check {
            name,
            pass: true,
            detail: String::new(),
        }
    }

    /// Records a failed condition; the first failure message is kept.
    fn require(&mut self, cond: bool, msg: impl FnOnce() -> String) {
        if !cond && self.pass {
            self.pass = false;
            self.detail = msg();
        }
    }

    fn done(mut self, summary: String) -> Self {
        if self.pass {
            self.detail = summary;
        }
        self
    }

    pub fn line(&self) -> String {
        format!("[{}] {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Binomial three-sigma band around `n p`.
fn within_3_sigma(count: usize, n: usize, p: f64) -> bool {
    let mean = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    (count as f64 - mean).abs() <= 3.0 * sd
}

pub fn lp_oracle(cases: usize) -> Check {
    let mut c = Check::new("lp oracle");
    let t = Instant::now();
    let mut r = rng(2024);
    let (mut opt, mut inf) = (0, 0);
    for case in 0..cases {
        let p = random_boxed_lp(&mut r, 6, 6);
        let s = solve_lp(&p, None);
        match vertex_enumeration(&p) {
            Some(best) => {
                opt += 1;
                c.require(s.status == LpStatus::Optimal, || format!("case {case}: status {:?}, oracle optimal", s.status));
                c.require((s.objective - best).abs() <= 1e-7, || {
                    format!("case {case}: objective {} vs oracle {best}", s.objective)
                });
            }
            None => {
                inf += 1;
                c.require(s.status == LpStatus::Infeasible, || format!("case {case}: status {:?}, oracle infeasible", s.status));
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    c.require(secs < 10.0, || format!("took {secs:.2}s"));
    c.done(format!("{cases} LPs ({opt} optimal, {inf} infeasible) agree within 1e-7 in {secs:.2}s"))
}

/// A random instance of at most three variables, at least one integer, with
/// inequality rows satisfied by a planted point on a 0.05 grid.
pub fn tiny_mip(r: &mut impl Rng) -> MipInstance {
    let n = r.gen_range(1..=3);
    let mut b = MipBuilder::new("tiny");
    let mut planted = Vec::new();
    for j in 0..n {
        let kind = if j == 0 || r.gen_bool(0.6) { VarKind::Integer } else { VarKind::Continuous };
        let lo = r.gen_range(-2i32..=0) as f64;
        let hi = lo + r.gen_range(1i32..=4) as f64;
        let v = if kind == VarKind::Integer {
            r.gen_range(lo as i32..=hi as i32) as f64
        } else {
            lo + r.gen_range(0..=((hi - lo) * 20.0) as i32) as f64 * 0.05
        };
        planted.push(v);
        b.add_var(kind, lo, hi, r.gen_range(-3.0..3.0));
    }
    for _ in 0..r.gen_range(1..=3) {
        let entries: Vec<(usize, f64)> = (0..n).map(|j| (j, r.gen_range(-20i32..=20) as f64 / 10.0)).collect();
        let act: f64 = entries.iter().map(|&(j, a)| a * planted[j]).sum();
        if r.gen_bool(0.5) {
            b.add_row(&entries, RowSense::Le, act + r.gen_range(0.0..1.5));
        } else {
            b.add_row(&entries, RowSense::Ge, act - r.gen_range(0.0..1.5));
        }
    }
    b.build().expect("tiny instance is valid")
}

/// Smallest L1 distance over the active set among feasible points of a
/// 0.05 grid of the bounding box.
pub fn grid_distance(inst: &MipInstance, x_tilde: &[f64], active: &[usize]) -> Option<f64> {
    let n = inst.num_vars();
    let steps: Vec<usize> = (0..n).map(|j| ((inst.upper()[j] - inst.lower()[j]) / 0.05).round() as usize).collect();
    let mut idx = vec![0usize; n];
    let mut best: Option<f64> = None;
    let mut x = vec![0.0; n];
    loop {
        for j in 0..n {
            x[j] = inst.lower()[j] + idx[j] as f64 * 0.05;
        }
        if inst.lp_violation(&x).is_ok_and(|v| v <= 1e-9) {
            let d: f64 = active.iter().map(|&i| (x[i] - x_tilde[i]).abs()).sum();
            best = Some(best.map_or(d, |b: f64| b.min(d)));
        }
        let mut j = 0;
        loop {
            if j == n {
                return best;
            }
            idx[j] += 1;
            if idx[j] <= steps[j] {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

pub fn projection_grid(cases: usize) -> Check {
    let mut c = Check::new("projection at alpha 0");
    let t = Instant::now();
    let mut r = rng(77);
    let cfg = ProjectionConfig::default();
    let mut worst_tight: f64 = 0.0;
    for case in 0..cases {
        let inst = tiny_mip(&mut r);
        let active = inst.integer_vars().to_vec();
        let mut xt = inst.lower().to_vec();
        for &i in &active {
            xt[i] = r.gen_range(inst.lower()[i] as i32..=inst.upper()[i] as i32) as f64;
        }
        let grid = grid_distance(&inst, &xt, &active).expect("planted point lies on the grid");
        let x_tilde = Point::new(xt).unwrap();
        match project(&inst, &x_tilde, &active, 0.0, &cfg, None) {
            Ok((p, _)) => {
                c.require(p.distance <= grid + 1e-3, || format!("case {case}: distance {} > grid {grid}", p.distance));
                let gap = (p.aux_sum - p.distance).abs();
                worst_tight = worst_tight.max(gap);
                c.require(gap <= 1e-9, || format!("case {case}: aux sum {} vs distance {}", p.aux_sum, p.distance));
                let v = inst.lp_violation(p.pair.relaxed.as_slice()).unwrap();
                c.require(v <= 1e-6, || format!("case {case}: projected point violates rows by {v}"));
            }
            Err(e) => c.require(false, || format!("case {case}: {e}")),
        }
    }
    let secs = t.elapsed().as_secs_f64();
    c.require(secs < 10.0, || format!("took {secs:.2}s"));
    c.done(format!("{cases} fixtures, distance within grid + 1e-3, max |sum d - distance| = {worst_tight:.1e}, {secs:.2}s"))
}

pub fn metropolis() -> Check {
    let mut c = Check::new("metropolis statistics");
    let t = Instant::now();
    const N: usize = 100_000;
    let mut r = rng(5);
    let mut summary = Vec::new();
    for (d, a) in [(0.2f64, 0.5f64), (1.0, 1.0), (0.05, 0.1)] {
        let p = (-d / a).exp();
        let k = (0..N).filter(|_| metropolis_accept(d, a, 1.0, &mut r)).count();
        c.require(within_3_sigma(k, N, p), || format!("({d}, {a}): {k}/{N} vs p = {p:.5}"));
        summary.push(format!("{:.4}~{:.4}", k as f64 / N as f64, p));
    }
    for d in [0.0, -0.3] {
        let k = (0..N).filter(|_| metropolis_accept(d, 0.5, 1.0, &mut r)).count();
        c.require(k == N, || format!("delta {d}: {k}/{N} accepted"));
    }
    let k = (0..N).filter(|_| metropolis_accept(0.4, 0.0, 1.0, &mut r)).count();
    c.require(k == 0, || format!("alpha 0: {k}/{N} accepted"));
    let secs = t.elapsed().as_secs_f64();
    c.require(secs < 5.0, || format!("took {secs:.2}s"));
    c.done(format!("rates {}; non-positive deltas all accepted; alpha 0 none; {secs:.2}s", summary.join(", ")))
}

pub fn calibration_identity(cases: usize) -> Check {
    let mut c = Check::new("calibration identity");
    let mut r = rng(9);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let dmax = 10f64.powf(r.gen_range(-2.0..2.0));
        let ah = r.gen_range(0.05..2.0);
        let ph = r.gen_range(0.01..0.99);
        let norm = calibrate_delta_norm(dmax, ah, ph);
        let p = acceptance_probability(dmax, ah, norm);
        worst = worst.max((p - ph).abs());
        c.require((p - ph).abs() <= 1e-12, || format!("({dmax}, {ah}, {ph}) gives {p}"));
    }
    c.done(format!("{cases} triples, max error {worst:.1e}"))
}

pub fn ph_schedule() -> Check {
    let mut c = Check::new("p_h schedule");
    let mut r = rng(13);
    for _ in 0..50 {
        let outcomes: Vec<bool> = (0..r.gen_range(1..30)).map(|_| r.gen_bool(0.5)).collect();
        let p0 = r.gen_range(0.05..0.95);
        let cfg = SolverConfig {
            p_h: p0,
            ..Default::default()
        };
        let mut state = AnnealState::new(&cfg);
        let (mut direct, mut expect) = (p0, p0);
        for &found in &outcomes {
            direct = update_ph(direct, found);
            state.end_run(found);
            expect = if found { expect * 0.9 } else { expect.powf(0.5) };
            c.require(direct == expect && state.p_h == expect, || {
                format!("after {outcomes:?} from {p0}: {direct} / {} vs {expect}", state.p_h)
            });
        }
    }
    let spot = update_ph(0.7, false);
    c.require((spot - 0.836660).abs() <= 1e-6, || format!("sqrt(0.7) step gave {spot}"));
    let down = update_ph(0.7, true);
    c.require((down - 0.63).abs() <= 1e-12, || format!("0.9 step gave {down}"));
    c.done(format!("50 random outcome sequences exact; 0.7 -> {spot:.6} on failure, {down:.2} on success"))
}

fn binary_instance(n: usize, r: &mut impl Rng) -> (MipInstance, SolutionPair) {
    let mut b = MipBuilder::new("bin");
    for _ in 0..n {
        b.add_binary(r.gen_range(-1.0..1.0));
    }
    let inst = b.build().unwrap();
    let active = inst.integer_vars().to_vec();
    let integral: Vec<f64> = (0..n).map(|_| r.gen_range(0..=1) as f64).collect();
    let relaxed: Vec<f64> = integral
        .iter()
        .map(|&v| if r.gen_bool(0.7) { r.gen_range(0.0..1.0) } else { v })
        .collect();
    let pair = SolutionPair::new(&inst, Point::new(relaxed).unwrap(), Point::new(integral).unwrap(), &active);
    (inst, pair)
}

fn integer_instance(n: usize, r: &mut impl Rng) -> (MipInstance, SolutionPair) {
    let mut b = MipBuilder::new("int");
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for _ in 0..n {
        let l = r.gen_range(-20i32..=5) as f64;
        let h = l + [1.0, 4.0, 9.0, 30.0, 200.0][r.gen_range(0..5)];
        b.add_var(VarKind::Integer, l, h, 0.0);
        lo.push(l);
        hi.push(h);
    }
    let inst = b.build().unwrap();
    let active = inst.integer_vars().to_vec();
    let integral: Vec<f64> = (0..n).map(|i| r.gen_range(lo[i] as i64..=hi[i] as i64) as f64).collect();
    let relaxed: Vec<f64> = (0..n)
        .map(|i| if r.gen_bool(0.7) { r.gen_range(lo[i]..hi[i]) } else { integral[i] })
        .collect();
    let pair = SolutionPair::new(&inst, Point::new(relaxed).unwrap(), Point::new(integral).unwrap(), &active);
    (inst, pair)
}

fn integral_in_bounds(inst: &MipInstance, p: &Point) -> bool {
    inst.integer_vars()
        .iter()
        .all(|&i| p[i] == p[i].round() && p[i] >= inst.lower()[i] && p[i] <= inst.upper()[i])
}

fn differing(a: &Point, b: &Point) -> Vec<usize> {
    (0..a.len()).filter(|&i| a[i] != b[i]).collect()
}

/// Weak-perturbation count bounds computed from the list length alone.
#[allow(clippy::manual_div_ceil)]
fn weak_bounds(len: usize) -> (usize, usize) {
    let t = (len + 9) / 10;
    let lo = ((t + 1) / 2).clamp(1, len);
    let hi = (t * 3 / 2).clamp(1, len);
    (lo, hi)
}

pub fn move_laws(trials: usize) -> Check {
    let mut c = Check::new("move laws");
    let t = Instant::now();
    let params = MoveParams::default();
    let mut r = rng(21);
    let (mut flips, mut coins) = (0usize, 0usize);
    for trial in 0..trials {
        let n = r.gen_range(1..=40);
        let (inst, pair) = binary_instance(n, &mut r);
        let active = inst.integer_vars().to_vec();
        let rr = randomized_round(&inst, &pair.relaxed, &active, &params, &mut r);
        c.require(integral_in_bounds(&inst, &rr.point), || format!("trial {trial}: rounding left the lattice"));
        let frac = active.iter().filter(|&&i| (pair.relaxed[i] - pair.integral[i]).abs() > params.eps_int).count();
        match weak_perturb_binary(&inst, &pair, &active, &params, &mut r) {
            Some(w) => {
                let (lo, hi) = weak_bounds(frac);
                let d = differing(&w.point, &pair.integral);
                c.require(integral_in_bounds(&inst, &w.point), || format!("trial {trial}: weak flip out of bounds"));
                c.require(d.len() >= lo && d.len() <= hi, || format!("trial {trial}: {} flips outside [{lo}, {hi}] for {frac} fractional", d.len()));
            }
            None => c.require(frac == 0, || format!("trial {trial}: weak move refused with {frac} fractional")),
        }
        let s = strong_perturb_binary(&inst, &pair, &active, &params, &mut r);
        c.require(integral_in_bounds(&inst, &s.point), || format!("trial {trial}: strong flip out of bounds"));

        // fractionality exactly 0.2 everywhere: flip iff omega > 0.3
        let integral: Vec<f64> = (0..n).map(|_| r.gen_range(0..=1) as f64).collect();
        let relaxed: Vec<f64> = integral.iter().map(|&v| if v == 0.0 { 0.2 } else { 0.8 }).collect();
        let p2 = SolutionPair::new(&inst, Point::new(relaxed).unwrap(), Point::new(integral).unwrap(), &active);
        let s = strong_perturb_binary(&inst, &p2, &active, &params, &mut r);
        flips += differing(&s.point, &p2.integral).len();
        coins += n;

        let n = r.gen_range(1..=25);
        let (inst, pair) = integer_instance(n, &mut r);
        let active = inst.integer_vars().to_vec();
        let rr = randomized_round(&inst, &pair.relaxed, &active, &params, &mut r);
        c.require(integral_in_bounds(&inst, &rr.point), || format!("trial {trial}: domain rounding off the lattice"));
        if let Some(w) = weak_perturb_domain(&inst, &pair, &active, &params, &mut r) {
            let frac = active.iter().filter(|&&i| (pair.relaxed[i] - pair.integral[i]).abs() > params.eps_int).count();
            let (lo, hi) = weak_bounds(frac);
            c.require(integral_in_bounds(&inst, &w.point), || format!("trial {trial}: weak domain out of bounds"));
            c.require(w.touched.len() >= lo && w.touched.len() <= hi, || format!("trial {trial}: weak domain touched {}", w.touched.len()));
        }
        let s = strong_perturb_domain(&inst, &pair, &active, &params, &mut r);
        let mut touched = s.touched.clone();
        touched.dedup();
        c.require(integral_in_bounds(&inst, &s.point), || format!("trial {trial}: strong domain out of bounds"));
        c.require(touched.len() == n.div_ceil(2), || format!("trial {trial}: touched {} of {n}", touched.len()));
        c.require(differing(&s.point, &pair.integral).iter().all(|i| touched.contains(i)), || {
            format!("trial {trial}: untouched index changed")
        });
    }
    // P(omega > 0.3) for omega uniform on (-0.3, 0.7)
    let p = (0.7 - 0.3) / (0.7 - -0.3);
    c.require(within_3_sigma(flips, coins, p), || format!("strong flip rate {flips}/{coins} vs {p}"));
    let secs = t.elapsed().as_secs_f64();
    c.require(secs < 10.0, || format!("took {secs:.2}s"));
    c.done(format!(
        "{trials} trials per move; strong flip rate {:.4} (expected {p:.4}); {secs:.2}s",
        flips as f64 / coins as f64
    ))
}

pub fn end_to_end(seeds: u64) -> Check {
    let mut c = Check::new("end-to-end feasibility");
    let t = Instant::now();
    let cfg = SolverConfig {
        budget: Budget { n_t: 2000, ..Budget::default() },
        ..Default::default()
    };
    let mut parts = Vec::new();
    for f in suite() {
        let inst = &f.instance;
        c.require(inst.is_mip_feasible(&f.planted, &cfg.tol), || format!("{}: planted point infeasible", inst.name()));
        let n = inst.num_vars();
        c.require((5..=50).contains(&n), || format!("{}: {n} variables", inst.name()));
        let mut ok = 0;
        for seed in 0..seeds {
            let rep = afp_twostage_solve(inst, &cfg, seed);
            let used: usize = rep.runs.iter().map(|r| r.iterations.max(1)).sum();
            c.require(used <= cfg.budget.n_t && rep.iterations <= cfg.budget.n_t, || {
                format!("{} seed {seed}: {used} iterations charged", inst.name())
            });
            if let Some(b) = &rep.best {
                c.require(inst.is_mip_feasible(&b.point, &cfg.tol), || format!("{} seed {seed}: reported point infeasible", inst.name()));
                ok += 1;
            }
        }
        let rate = ok as f64 / seeds as f64;
        c.require(rate >= 0.9, || format!("{}: success {rate:.2}", inst.name()));
        parts.push(format!("{} {ok}/{seeds}", inst.name()));
    }
    let secs = t.elapsed().as_secs_f64();
    c.require(secs < 120.0, || format!("took {secs:.1}s"));
    c.done(format!("{}; {secs:.1}s", parts.join(", ")))
}

/// Accepted worsening moves per quartile of one run's iterations.
pub fn bad_accepts_by_quartile(events: &[afp_core::engine::Event], run: usize, iterations: usize, eps: f64) -> (usize, usize) {
    let q = iterations / 4;
    let count = |lo: usize, hi: usize| {
        events
            .iter()
            .filter(|e| e.run == run && e.iter > lo && e.iter <= hi && e.accepted && e.delta_raw > eps)
            .count()
    };
    (count(0, q), count(iterations - q, iterations))
}

pub const ANNEAL_FIXTURE: &str = "coupled_10";
pub const ANNEAL_SEED: u64 = 0;

pub fn annealing_shape() -> Check {
    let mut c = Check::new("annealing shape");
    let inst = fixtures::by_name(ANNEAL_FIXTURE).unwrap().instance;
    let mut cfg = SolverConfig {
        budget: Budget { n_t: 400, ..Budget::default() },
        record_events: true,
        ..Default::default()
    };
    // run 0 calibrates the normaliser; run 1 is the first annealed run
    let rep = afp_solve(&inst, &cfg, ANNEAL_SEED);
    let run = 1;
    let r1 = &rep.runs[run];
    let (first, last) = bad_accepts_by_quartile(&rep.events, run, r1.iterations, cfg.tol.int);
    c.require(r1.iterations >= 8, || format!("run {run} has only {} iterations", r1.iterations));
    c.require(first > last, || format!("first quartile {first} <= last quartile {last}"));
    cfg.normalize_delta = false;
    let pinned = afp_solve(&inst, &cfg, ANNEAL_SEED);
    let p1 = &pinned.runs[run];
    c.require(p1.stop == StopReason::Stagnation, || format!("pinned run {run} stopped by {:?}", p1.stop));
    c.done(format!(
        "{ANNEAL_FIXTURE} seed {ANNEAL_SEED} run {run}: {first} bad moves accepted in the first quartile vs {last} in the last ({} iterations); pinned normaliser stops by {:?} after {} iterations",
        r1.iterations, p1.stop, p1.iterations
    ))
}

/// Binaries 0 and 1 are forced to 1/2 by `x0 + x1 = 1`, `x0 - x1 = 0`; the
/// other binaries only appear in easy covering rows.
pub fn hard_pair_fixture(easy: usize) -> MipInstance {
    let mut b = MipBuilder::new("hard_pair");
    let h0 = b.add_binary(1.0);
    let h1 = b.add_binary(1.0);
    b.add_row(&[(h0, 1.0), (h1, 1.0)], RowSense::Eq, 1.0);
    b.add_row(&[(h0, 1.0), (h1, -1.0)], RowSense::Eq, 0.0);
    let xs: Vec<usize> = (0..easy).map(|i| b.add_binary(1.0 + i as f64)).collect();
    for w in xs.chunks(2) {
        let row: Vec<(usize, f64)> = w.iter().map(|&i| (i, 1.0)).collect();
        b.add_row(&row, RowSense::Ge, 1.0);
    }
    b.build().unwrap()
}

/// `⌈0.8 n⌉` and `min(⌈1.2 n⌉, cap)` by exact rational arithmetic.
#[allow(clippy::manual_div_ceil)]
fn resized(n: usize, grow: bool, cap: usize) -> usize {
    let n = n.max(1);
    let v = if grow { (12 * n + 9) / 10 } else { (8 * n + 9) / 10 };
    if grow { v.min(cap) } else { v }.max(1)
}

pub fn twostage_bookkeeping() -> Check {
    let mut c = Check::new("two-stage bookkeeping");
    let inst = hard_pair_fixture(8);
    let cfg = SolverConfig {
        budget: Budget { n_t: 300, n_r: 30, k: 10 },
        ..Default::default()
    };
    let rep = afp_twostage_solve(&inst, &cfg, 3);
    c.require(rep.runs.first().is_some_and(|r| r.phase == Phase::Bootstrap && !r.success), || {
        "first run is not a failed bootstrap".into()
    });
    let first_stage = rep.runs.iter().find(|r| r.phase == Phase::Stage1);
    let hard = first_stage.and_then(|r| r.hard_set.clone());
    c.require(hard.as_deref() == Some(&[0, 1][..]), || format!("hard set after bootstrap {hard:?}"));

    // forced outcomes on a 50-variable state with distinct ranks
    let mut b = MipBuilder::new("ranks");
    for _ in 0..50 {
        b.add_binary(0.0);
    }
    let big = b.build().unwrap();
    let mut s = HardFixState::new(&big);
    s.ranks = (0..50u64).map(|i| (i * 7919) % 101 + 1).collect();
    s.init_hard_set();
    s.n_h = 20;
    let mut r = rng(31);
    let mut n = 20;
    let mut seq = vec![n];
    for _ in 0..200 {
        let outcome = [StageOutcome::Stage1Infeasible, StageOutcome::Stage2Infeasible, StageOutcome::Stage2Feasible][r.gen_range(0..3)];
        s.resize(outcome);
        n = resized(n, outcome == StageOutcome::Stage2Infeasible, 50);
        seq.push(n);
        c.require(s.n_h == n && s.hard.len() == n, || format!("after {outcome:?}: n_h {} vs {n}", s.n_h));
        let mut by_rank: Vec<usize> = (0..50).collect();
        by_rank.sort_by(|&a, &b| s.ranks[b].cmp(&s.ranks[a]).then(a.cmp(&b)));
        let mut top: Vec<usize> = by_rank[..n].to_vec();
        top.sort_unstable();
        c.require(s.hard == top, || format!("hard set is not the top {n} ranks"));
    }
    let mut shown: Vec<String> = seq.iter().take(8).map(usize::to_string).collect();
    shown.push("...".into());
    c.done(format!("hard set after bootstrap {:?}; 200 forced resizes match ({})", hard.unwrap_or_default(), shown.join(" ")))
}

fn seed_record(feasible: bool, objective: Option<f64>) -> SeedRecord {
    SeedRecord {
        instance: "x".into(),
        variant: "afp-2".into(),
        seed: 0,
        feasible,
        objective,
        iterations: 1,
        runs: 1,
        successful_runs: feasible as usize,
        run_seconds: vec![0.1],
        successful_run_seconds: if feasible { vec![0.1] } else { Vec::new() },
        seconds: 0.1,
    }
}

pub fn metric_formulas(dir: &Path) -> Check {
    let mut c = Check::new("metric formulas");
    c.require(compute_gap(110.0, 100.0) == 10.0, || "gap(110, 100)".into());
    c.require(compute_gap(100.0, 100.0) == 0.0, || "gap(ref, ref)".into());
    c.require(compute_gap(0.9, 0.4) == 50.0, || format!("guarded gap {}", compute_gap(0.9, 0.4)));
    c.require(gap_opt(Some(3.0), None).is_none(), || "missing reference gave a gap".into());
    let records: Vec<SeedRecord> = (0..10).map(|i| seed_record(i < 7, (i < 7).then_some(5.0))).collect();
    let (row, _) = aggregate("x", "", "afp-2", &records, None, false);
    c.require(row.success == 0.7 && row.gap.is_none(), || format!("success {} gap {:?}", row.success, row.gap));
    c.require(row.run_success == 0.7, || format!("run success {}", row.run_success));

    let mut m = Manifest::fixture_suite(vec![1, 2, 3], vec![Variant::AFP2, "fp-1".parse().unwrap()], SolverConfig::default());
    m.solver.budget.n_t = 150;
    m.instances = ["intknap_8", "coupled_10", "setpart_12"].iter().map(|f| InstanceEntry::fixture(f)).collect();
    let mut tables = Vec::new();
    for (k, parallel) in [(0, false), (1, false), (2, true)] {
        let out: PathBuf = dir.join(format!("run{k}"));
        let res = run_experiment(&m, dir, &load_plain_mps, RunOptions { parallel, record_events: true }).unwrap();
        write_outputs(&res, &out).unwrap();
        let read = |f: &str| std::fs::read(out.join(f)).unwrap();
        tables.push((read("results.csv"), read("runs.csv"), read("seeds.csv")));
    }
    c.require(tables[0] == tables[1], || "two identical runs wrote different CSV".into());
    c.require(tables[0] == tables[2], || "parallel run wrote different CSV".into());
    c.done("gap(110, 100) = 10, guarded gap 50, success 7/10 = 0.7, CSV byte-identical across repeats and parallel".into())
}

const CORPUS: [&str; 3] = ["mas76", "vpm2", "modglob"];

fn find_corpus_file(dir: &Path, name: &str) -> Option<PathBuf> {
    [format!("{name}.mps"), format!("{name}.mps.gz")]
        .into_iter()
        .map(|f| dir.join(f))
        .find(|p| p.exists())
}

fn load_any(path: &Path) -> Result<MipInstance, String> {
    if path.extension().is_some_and(|e| e == "gz") {
        let f = std::fs::File::open(path).map_err(|e| e.to_string())?;
        let gz = flate2::read::GzDecoder::new(f);
        afp_core::mps::parse_mps(std::io::BufReader::new(gz)).map_err(|e| e.to_string())
    } else {
        load_plain_mps(path)
    }
}

/// Looks for the instances under `$AFP_CORPUS` or `corpus/` at the workspace
/// root. `None` when any of them is missing.
pub fn corpus_smoke() -> Option<Check> {
    let dir = std::env::var_os("AFP_CORPUS")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus"));
    let files: Vec<PathBuf> = CORPUS.iter().map(|n| find_corpus_file(&dir, n)).collect::<Option<_>>()?;
    let mut c = Check::new("corpus smoke");
    let cfg = SolverConfig {
        time_limit: Some(60.0),
        ..Default::default()
    };
    let mut found = 0;
    let mut parts = Vec::new();
    for (name, path) in CORPUS.iter().zip(&files) {
        match load_any(path) {
            Ok(inst) => {
                let rep = afp_twostage_solve(&inst, &cfg, 1);
                if let Some(b) = &rep.best {
                    c.require(inst.is_mip_feasible(&b.point, &cfg.tol), || format!("{name}: infeasible report"));
                    found += 1;
                }
                parts.push(format!("{name} {} in {:.1}s", if rep.feasible() { "feasible" } else { "none" }, rep.seconds));
            }
            Err(e) => parts.push(format!("{name} failed to load: {e}")),
        }
    }
    c.require(found >= 2, || format!("{found}/3 feasible: {}", parts.join(", ")));
    Some(c.done(format!("{found}/3 feasible: {}", parts.join(", "))))
}
