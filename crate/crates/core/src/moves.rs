//! Neighbourhood functions mapping a solution pair to a new integral point.
//!
//! Every move returns a [`Proposal`]: a point that is integral and within
//! bounds on the active set, plus the indices it changed or redrew.
//! Coordinates outside the active set are never touched.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{MipInstance, Point, SolutionPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    RandomizedRounding,
    WeakPerturbation,
    StrongPerturbation,
    WeakPerturbationDomain,
    StrongPerturbationDomain,
}

impl MoveKind {
    pub const ALL: [MoveKind; 5] = [
        MoveKind::RandomizedRounding,
        MoveKind::WeakPerturbation,
        MoveKind::StrongPerturbation,
        MoveKind::WeakPerturbationDomain,
        MoveKind::StrongPerturbationDomain,
    ];

    /// Default move list for the annealed pump.
    pub const DEFAULT_LIST: [MoveKind; 3] = [
        MoveKind::RandomizedRounding,
        MoveKind::WeakPerturbationDomain,
        MoveKind::StrongPerturbationDomain,
    ];

    pub fn binary_only(self) -> bool {
        matches!(self, MoveKind::WeakPerturbation | MoveKind::StrongPerturbation)
    }

    pub fn name(self) -> &'static str {
        match self {
            MoveKind::RandomizedRounding => "randomized_rounding",
            MoveKind::WeakPerturbation => "weak_perturbation",
            MoveKind::StrongPerturbation => "strong_perturbation",
            MoveKind::WeakPerturbationDomain => "weak_perturbation_domain",
            MoveKind::StrongPerturbationDomain => "strong_perturbation_domain",
        }
    }
}

impl std::str::FromStr for MoveKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        let kind = match key.as_str() {
            "rr" | "randomized_rounding" => MoveKind::RandomizedRounding,
            "wp" | "weak_perturbation" => MoveKind::WeakPerturbation,
            "sp" | "strong_perturbation" => MoveKind::StrongPerturbation,
            "wpd" | "weak_perturbation_domain" => MoveKind::WeakPerturbationDomain,
            "spd" | "strong_perturbation_domain" => MoveKind::StrongPerturbationDomain,
            _ => return Err(format!("unknown move `{s}`")),
        };
        Ok(kind)
    }
}

impl std::fmt::Display for MoveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MoveParams {
    /// Share of the fractional list used to size weak perturbations.
    pub t_fraction: f64,
    pub strong_low: f64,
    pub strong_high: f64,
    pub window_min: f64,
    pub window_fraction: f64,
    /// Domains smaller than this take the small-domain cases.
    pub small_domain: f64,
    /// Distance to a bound, as a share of the domain, that counts as "near".
    pub beta: f64,
    /// Values within this of an integer count as integral.
    pub eps_int: f64,
}

impl Default for MoveParams {
    fn default() -> Self {
        MoveParams {
            t_fraction: 0.1,
            strong_low: -0.3,
            strong_high: 0.7,
            window_min: 50.0,
            window_fraction: 0.05,
            small_domain: 10.0,
            beta: 0.1,
            eps_int: 1e-6,
        }
    }
}

impl MoveParams {
    pub fn window(&self, domain: f64) -> f64 {
        self.window_min.max(self.window_fraction * domain)
    }

    /// Inclusive range of the weak-perturbation flip count for a list of
    /// `len` candidates, after clamping to `[1, len]`.
    pub fn weak_count_range(&self, len: usize) -> (usize, usize) {
        let t = (self.t_fraction * len as f64).ceil();
        let lo = ((t / 2.0).ceil() as usize).clamp(1, len.max(1));
        let hi = ((1.5 * t).floor() as usize).clamp(lo, len.max(1));
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub point: Point,
    pub touched: Vec<usize>,
}

/// `τ(ω)`: rounding threshold shift for randomized rounding.
pub fn tau(omega: f64) -> f64 {
    let t = 2.0 * omega * (1.0 - omega);
    if omega <= 0.5 {
        t
    } else {
        1.0 - t
    }
}

fn clamp_to(inst: &MipInstance, i: usize, v: f64) -> f64 {
    v.clamp(inst.lower()[i], inst.upper()[i])
}

/// Uniform integer draw over `[lo, hi]` intersected with the bounds of `i`.
fn uniform_int<R: Rng + ?Sized>(inst: &MipInstance, i: usize, lo: f64, hi: f64, rng: &mut R) -> f64 {
    let a = lo.max(inst.lower()[i]).ceil();
    let b = hi.min(inst.upper()[i]).floor();
    if a > b {
        return clamp_to(inst, i, (0.5 * (lo + hi)).round());
    }
    rng.gen_range(a as i64..=b as i64) as f64
}

fn domain(inst: &MipInstance, i: usize) -> f64 {
    inst.upper()[i] - inst.lower()[i]
}

/// Rounds each active coordinate of `relaxed` to `⌊x̄ + τ(ω)⌋`. Coordinates
/// already within `eps_int` of an integer snap to it.
pub fn randomized_round<R: Rng + ?Sized>(
    inst: &MipInstance,
    relaxed: &Point,
    active: &[usize],
    params: &MoveParams,
    rng: &mut R,
) -> Proposal {
    let mut out = relaxed.clone();
    let v = out.values_mut();
    for &i in active {
        let x = v[i];
        let r = x.round();
        let rounded = if (x - r).abs() <= params.eps_int {
            r
        } else {
            let omega: f64 = rng.gen();
            (x + tau(omega)).floor()
        };
        v[i] = clamp_to(inst, i, rounded);
    }
    Proposal {
        point: out,
        touched: active.to_vec(),
    }
}

/// Fractional active indices ordered by `key` descending, ties by index.
fn ranked<F: Fn(usize) -> f64>(pair: &SolutionPair, idx: impl Iterator<Item = usize>, eps: f64, key: F) -> Vec<usize> {
    let mut list: Vec<(usize, f64)> = idx
        .filter(|&i| (pair.relaxed[i] - pair.integral[i]).abs() > eps)
        .map(|i| (i, key(i)))
        .collect();
    list.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    list.into_iter().map(|(i, _)| i).collect()
}

/// Picks `m` entries from the head of `list`, `m` drawn from the weak count
/// range, sampling uniformly inside a pool of the top `⌊3T/2⌋`.
fn weak_pick<R: Rng + ?Sized>(list: &[usize], params: &MoveParams, rng: &mut R) -> Vec<usize> {
    let (lo, hi) = params.weak_count_range(list.len());
    let m = rng.gen_range(lo..=hi);
    let pool = hi.max(m).min(list.len());
    let mut picked: Vec<usize> = sample(rng, pool, m).into_iter().map(|k| list[k]).collect();
    picked.sort_unstable();
    picked
}

/// Flips a few of the most fractional active binaries. `None` when no active
/// binary is fractional.
pub fn weak_perturb_binary<R: Rng + ?Sized>(
    inst: &MipInstance,
    pair: &SolutionPair,
    active: &[usize],
    params: &MoveParams,
    rng: &mut R,
) -> Option<Proposal> {
    let binaries = active.iter().copied().filter(|&i| inst.is_binary(i));
    let list = ranked(pair, binaries, params.eps_int, |i| {
        (pair.relaxed[i] - pair.integral[i]).abs()
    });
    if list.is_empty() {
        return None;
    }
    let flips = weak_pick(&list, params, rng);
    let mut out = pair.integral.clone();
    let v = out.values_mut();
    for &i in &flips {
        v[i] = 1.0 - v[i];
    }
    Some(Proposal {
        point: out,
        touched: flips,
    })
}

/// Flips each active binary `i` when `|x̄_i - x̃_i| + max(0, ω_i) > 0.5`.
pub fn strong_perturb_binary<R: Rng + ?Sized>(
    inst: &MipInstance,
    pair: &SolutionPair,
    active: &[usize],
    params: &MoveParams,
    rng: &mut R,
) -> Proposal {
    let mut out = pair.integral.clone();
    let mut touched = Vec::new();
    let v = out.values_mut();
    for &i in active.iter().filter(|&&i| inst.is_binary(i)) {
        let omega = rng.gen_range(params.strong_low..params.strong_high);
        let frac = (pair.relaxed[i] - pair.integral[i]).abs();
        if frac + omega.max(0.0) > 0.5 {
            v[i] = 1.0 - v[i];
            touched.push(i);
        }
    }
    Proposal { point: out, touched }
}

/// Redraws a few of the most fractional active integers (fractionality
/// normalised by domain) inside a window on the side of `x̄`. `None` when no
/// active integer is fractional.
pub fn weak_perturb_domain<R: Rng + ?Sized>(
    inst: &MipInstance,
    pair: &SolutionPair,
    active: &[usize],
    params: &MoveParams,
    rng: &mut R,
) -> Option<Proposal> {
    let list = ranked(pair, active.iter().copied(), params.eps_int, |i| {
        (pair.relaxed[i] - pair.integral[i]).abs() / domain(inst, i).max(1.0)
    });
    if list.is_empty() {
        return None;
    }
    let picked = weak_pick(&list, params, rng);
    let mut out = pair.integral.clone();
    let v = out.values_mut();
    for &i in &picked {
        let (xb, xt) = (pair.relaxed[i], pair.integral[i]);
        let w = params.window(domain(inst, i));
        v[i] = if xb >= xt {
            uniform_int(inst, i, xb, xb + w, rng)
        } else {
            uniform_int(inst, i, xb - w, xb, rng)
        };
    }
    Some(Proposal {
        point: out,
        touched: picked,
    })
}

/// Redraws `⌈|A|/2⌉` random active integers. The draw range is the first
/// matching case of: small domain above/below `x̃`, `x̃` near the upper bound,
/// `x̃` near the lower bound, otherwise a window around `x̄`.
pub fn strong_perturb_domain<R: Rng + ?Sized>(
    inst: &MipInstance,
    pair: &SolutionPair,
    active: &[usize],
    params: &MoveParams,
    rng: &mut R,
) -> Proposal {
    let mut out = pair.integral.clone();
    let count = active.len().div_ceil(2);
    let mut picked: Vec<usize> = sample(rng, active.len(), count)
        .into_iter()
        .map(|k| active[k])
        .collect();
    picked.sort_unstable();
    let v = out.values_mut();
    for &i in &picked {
        let (lo, hi) = (inst.lower()[i], inst.upper()[i]);
        let d = hi - lo;
        let (xb, xt) = (pair.relaxed[i], pair.integral[i]);
        let w = params.window(d);
        let (a, b) = if d < params.small_domain && xb >= xt {
            (xb, hi)
        } else if d < params.small_domain {
            (lo, xb)
        } else if hi - xt <= params.beta * d {
            (hi - w, hi)
        } else if xt - lo <= params.beta * d {
            (lo, lo + w)
        } else {
            (xb - w, xb + w)
        };
        v[i] = uniform_int(inst, i, a, b, rng);
    }
    Proposal {
        point: out,
        touched: picked,
    }
}

/// Applies `kind`. Weak moves with nothing fractional fall through to their
/// strong counterpart; the returned kind is the one actually applied.
pub fn apply_move<R: Rng + ?Sized>(
    kind: MoveKind,
    inst: &MipInstance,
    pair: &SolutionPair,
    active: &[usize],
    params: &MoveParams,
    rng: &mut R,
) -> (MoveKind, Proposal) {
    match kind {
        MoveKind::RandomizedRounding => (kind, randomized_round(inst, &pair.relaxed, active, params, rng)),
        MoveKind::WeakPerturbation => match weak_perturb_binary(inst, pair, active, params, rng) {
            Some(p) => (kind, p),
            None => (
                MoveKind::StrongPerturbation,
                strong_perturb_binary(inst, pair, active, params, rng),
            ),
        },
        MoveKind::StrongPerturbation => (kind, strong_perturb_binary(inst, pair, active, params, rng)),
        MoveKind::WeakPerturbationDomain => match weak_perturb_domain(inst, pair, active, params, rng) {
            Some(p) => (kind, p),
            None => (
                MoveKind::StrongPerturbationDomain,
                strong_perturb_domain(inst, pair, active, params, rng),
            ),
        },
        MoveKind::StrongPerturbationDomain => (kind, strong_perturb_domain(inst, pair, active, params, rng)),
    }
}

/// The moves of `list` usable on `active`: binary-only moves are dropped
/// when any active variable is not binary.
pub fn usable_moves(inst: &MipInstance, active: &[usize], list: &[MoveKind]) -> Vec<MoveKind> {
    let all_binary = active.iter().all(|&i| inst.is_binary(i));
    list.iter().copied().filter(|k| all_binary || !k.binary_only()).collect()
}
