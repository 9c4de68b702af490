//! Independent oracles and random generators shared by the integration tests.
#![allow(clippy::needless_range_loop)]
#![allow(dead_code)]

pub mod checks;

use afp_core::lp::LpProblem;
use afp_core::model::{RowSense, SparseRows};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Solves the square system `m x = b` by Gaussian elimination with partial
/// pivoting. `None` when singular.
pub fn solve_dense(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))?;
        if m[piv][k].abs() < 1e-10 {
            return None;
        }
        m.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f != 0.0 {
                for c in k..n {
                    m[i][c] -= f * m[k][c];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|c| m[k][c] * x[c]).sum();
        x[k] = (b[k] - s) / m[k][k];
    }
    Some(x)
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// Minimum objective over all basic feasible points of a box-bounded LP,
/// found by enumerating every square subsystem of tight constraints.
/// `None` when no vertex is feasible.
pub fn vertex_enumeration(p: &LpProblem) -> Option<f64> {
    let n = p.num_vars();
    let dense_row = |i: usize| {
        let mut r = vec![0.0; n];
        for (c, v) in p.rows().row(i) {
            r[c] = v;
        }
        r
    };
    // every vertex is the solution of n linearly independent tight planes;
    // equality rows are tight at every feasible point so they are just planes
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..p.num_rows() {
        let plane = (dense_row(i), p.rhs()[i]);
        if plane.0.iter().any(|&v| v != 0.0) {
            planes.push(plane);
        }
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), p.lower()[j]));
        planes.push((e, p.upper()[j]));
    }
    let mut best: Option<f64> = None;
    let mut consider = |x: Vec<f64>| {
        if p.violation(&x) <= 1e-9 {
            let obj: f64 = p.objective().iter().zip(&x).map(|(c, v)| c * v).sum();
            best = Some(best.map_or(obj, |b: f64| b.min(obj)));
        }
    };
    combinations(planes.len(), n, &mut |idx| {
        let m = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let b = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_dense(m, b) {
            consider(x);
        }
    });
    best
}

/// A random LP with at most `max_n` variables and `max_m` rows, all
/// variables boxed. Most are feasible through a planted interior point.
pub fn random_boxed_lp(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> LpProblem {
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    let lower: Vec<f64> = (0..n).map(|_| rng.gen_range(-5i32..=0) as f64).collect();
    let upper: Vec<f64> = lower.iter().map(|l| l + rng.gen_range(1i32..=6) as f64).collect();
    let x0: Vec<f64> = (0..n).map(|j| rng.gen_range(lower[j]..=upper[j])).collect();
    let planted = rng.gen_bool(0.85);
    let mut rows = SparseRows::new();
    let mut senses = Vec::new();
    let mut rhs = Vec::new();
    for _ in 0..m {
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.7) {
                entries.push((j, (rng.gen_range(-30i32..=30) as f64) / 10.0));
            }
        }
        let act: f64 = entries.iter().map(|&(j, v)| v * x0[j]).sum();
        let sense = match rng.gen_range(0..20) {
            0..=2 => RowSense::Eq,
            3..=11 => RowSense::Le,
            _ => RowSense::Ge,
        };
        let b = if planted {
            let slack = rng.gen_range(0.0..2.0);
            match sense {
                RowSense::Le => act + slack,
                RowSense::Ge => act - slack,
                RowSense::Eq => act,
            }
        } else {
            rng.gen_range(-8.0..8.0)
        };
        rows.push_row(&entries);
        senses.push(sense);
        rhs.push(b);
    }
    let objective: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    LpProblem::new(objective, lower, upper, rows, senses, rhs).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
