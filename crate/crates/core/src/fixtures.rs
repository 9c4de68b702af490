//! Small crafted instances with a planted feasible point, used by the test
//! suite, the benchmarks and the `afp fixtures` command.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{MipBuilder, MipInstance, RowSense, VarKind};

pub struct Fixture {
    pub instance: MipInstance,
    /// A MIP-feasible point known by construction.
    pub planted: Vec<f64>,
}

/// The bundled suite: ten instances of 5 to 50 variables.
pub fn suite() -> Vec<Fixture> {
    vec![
        set_partition("setpart_12", 6, 12, 1),
        set_partition("setpart_30", 10, 30, 2),
        knapsack_cover("knapcover_20", 20, 3),
        multi_knapsack("multiknap_30", 30, 3, 4),
        coupled_integers("coupled_10", 10, 5),
        integer_equalities("inteq_12", 12, 4, 6),
        facility_location("facility_45", 5, 8, 7),
        assignment("assign_25", 5, 8),
        bin_packing("binpack_21", 6, 3, 9),
        integer_knapsack_eq("intknap_8", 8, 10),
    ]
}

/// Looks up a suite member by instance name.
pub fn by_name(name: &str) -> Option<Fixture> {
    suite().into_iter().find(|f| f.instance.name() == name)
}

fn fixture(b: MipBuilder, planted: Vec<f64>) -> Fixture {
    let instance = b.build().expect("fixture is well formed");
    debug_assert!(instance.is_mip_feasible(&planted, &Default::default()));
    Fixture { instance, planted }
}

/// Exact cover of `elements` by a planted partition plus random decoy sets.
pub fn set_partition(name: &str, elements: usize, sets: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..elements).collect();
    order.shuffle(&mut rng);
    let mut columns: Vec<Vec<usize>> = Vec::new();
    let mut k = 0;
    while k < elements {
        let len = rng.gen_range(1..=3).min(elements - k);
        columns.push(order[k..k + len].to_vec());
        k += len;
    }
    let planted_count = columns.len();
    while columns.len() < sets {
        let len = rng.gen_range(2..=3);
        let mut s: Vec<usize> = (0..elements).collect();
        s.shuffle(&mut rng);
        s.truncate(len);
        columns.push(s);
    }
    let mut perm: Vec<usize> = (0..columns.len()).collect();
    perm.shuffle(&mut rng);
    let mut b = MipBuilder::new(name);
    let mut planted = vec![0.0; columns.len()];
    let mut rows = vec![Vec::new(); elements];
    for (slot, &c) in perm.iter().enumerate() {
        let cost = rng.gen_range(1..=10) as f64;
        let j = b.add_binary(cost);
        debug_assert_eq!(j, slot);
        if c < planted_count {
            planted[j] = 1.0;
        }
        for &e in &columns[c] {
            rows[e].push((j, 1.0));
        }
    }
    for r in rows {
        b.add_row(&r, RowSense::Eq, 1.0);
    }
    fixture(b, planted)
}

/// Maximise value under a knapsack row while covering a minimum weight of a
/// designated item group.
pub fn knapsack_cover(name: &str, n: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(3..=20) as f64).collect();
    let planted: Vec<f64> = (0..n).map(|_| rng.gen_bool(0.4) as u8 as f64).collect();
    let load: f64 = w.iter().zip(&planted).map(|(a, x)| a * x).sum();
    let mut b = MipBuilder::new(name).sense(crate::model::ObjSense::Maximize);
    for &wi in &w {
        b.add_binary(wi + rng.gen_range(0..5) as f64);
    }
    let all: Vec<(usize, f64)> = w.iter().enumerate().map(|(i, &a)| (i, a)).collect();
    b.add_row(&all, RowSense::Le, load + 0.5);
    let group: Vec<(usize, f64)> = (0..n).step_by(2).map(|i| (i, w[i])).collect();
    let cover: f64 = group.iter().map(|&(i, a)| a * planted[i]).sum();
    b.add_row(&group, RowSense::Ge, cover);
    fixture(b, planted)
}

pub fn multi_knapsack(name: &str, n: usize, rows: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted: Vec<f64> = (0..n).map(|_| rng.gen_bool(0.5) as u8 as f64).collect();
    let mut b = MipBuilder::new(name).sense(crate::model::ObjSense::Maximize);
    for _ in 0..n {
        b.add_binary(rng.gen_range(1..=15) as f64);
    }
    for _ in 0..rows {
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=12) as f64).collect();
        let lhs: f64 = a.iter().zip(&planted).map(|(x, y)| x * y).sum();
        let entries: Vec<(usize, f64)> = a.iter().enumerate().map(|(i, &v)| (i, v)).collect();
        b.add_row(&entries, RowSense::Le, lhs + rng.gen_range(0..4) as f64);
    }
    let card = planted.iter().sum::<f64>();
    let entries: Vec<(usize, f64)> = (0..n).map(|i| (i, 1.0)).collect();
    b.add_row(&entries, RowSense::Ge, card - 1.0);
    fixture(b, planted)
}

/// Chain of general integers coupled by equalities `2 x_i - x_{i+1} + z_i = c_i`
/// with small integer slacks `z_i`.
pub fn coupled_integers(name: &str, n: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=12) as f64).collect();
    let mut b = MipBuilder::new(name);
    let x: Vec<usize> = (0..n).map(|_| b.add_var(VarKind::Integer, 0.0, 15.0, rng.gen_range(1..=4) as f64)).collect();
    let mut planted = xs.clone();
    for i in 0..n - 1 {
        let zi = rng.gen_range(0..=3) as f64;
        let z = b.add_var(VarKind::Integer, 0.0, 3.0, 0.5);
        planted.push(zi);
        let c = 2.0 * xs[i] - xs[i + 1] + zi;
        b.add_row(&[(x[i], 2.0), (x[i + 1], -1.0), (z, 1.0)], RowSense::Eq, c);
    }
    let total: f64 = xs.iter().sum();
    let entries: Vec<(usize, f64)> = x.iter().map(|&j| (j, 1.0)).collect();
    b.add_row(&entries, RowSense::Ge, total - 3.0);
    fixture(b, planted)
}

/// General integers in `[0, 20]` with a few dense equality rows.
pub fn integer_equalities(name: &str, n: usize, rows: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=20) as f64).collect();
    let mut b = MipBuilder::new(name);
    for _ in 0..n {
        b.add_var(VarKind::Integer, 0.0, 20.0, rng.gen_range(-3..=3) as f64);
    }
    for r in 0..rows {
        let entries: Vec<(usize, f64)> = (0..n)
            .filter(|j| (j + r) % 3 != 0)
            .map(|j| (j, rng.gen_range(1..=3) as f64))
            .collect();
        let rhs: f64 = entries.iter().map(|&(j, a)| a * planted[j]).sum();
        b.add_row(&entries, RowSense::Eq, rhs);
    }
    fixture(b, planted)
}

/// Uncapacitated facility location with binary openings and continuous
/// assignments.
pub fn facility_location(name: &str, facilities: usize, customers: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = MipBuilder::new(name);
    let y: Vec<usize> = (0..facilities).map(|_| b.add_binary(rng.gen_range(20..=40) as f64)).collect();
    let mut x = vec![vec![0; facilities]; customers];
    for row in x.iter_mut() {
        for f in row.iter_mut() {
            *f = b.add_var(VarKind::Continuous, 0.0, 1.0, rng.gen_range(1..=15) as f64);
        }
    }
    for row in &x {
        let entries: Vec<(usize, f64)> = row.iter().map(|&j| (j, 1.0)).collect();
        b.add_row(&entries, RowSense::Eq, 1.0);
        for (f, &j) in row.iter().enumerate() {
            b.add_row(&[(j, 1.0), (y[f], -1.0)], RowSense::Le, 0.0);
        }
    }
    let mut planted = vec![0.0; facilities + facilities * customers];
    planted[y[0]] = 1.0;
    for row in &x {
        planted[row[0]] = 1.0;
    }
    fixture(b, planted)
}

pub fn assignment(name: &str, n: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = MipBuilder::new(name);
    let x: Vec<Vec<usize>> = (0..n)
        .map(|_| (0..n).map(|_| b.add_binary(rng.gen_range(1..=20) as f64)).collect())
        .collect();
    for i in 0..n {
        let r: Vec<(usize, f64)> = (0..n).map(|j| (x[i][j], 1.0)).collect();
        b.add_row(&r, RowSense::Eq, 1.0);
        let c: Vec<(usize, f64)> = (0..n).map(|j| (x[j][i], 1.0)).collect();
        b.add_row(&c, RowSense::Eq, 1.0);
    }
    let mut planted = vec![0.0; n * n];
    for i in 0..n {
        planted[x[i][i]] = 1.0;
    }
    fixture(b, planted)
}

/// Items into bins of capacity 10, minimising the number of bins used.
pub fn bin_packing(name: &str, items: usize, bins: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let home: Vec<usize> = (0..items).map(|i| i % bins).collect();
    let mut size = vec![0.0; items];
    let mut load = vec![0.0; bins];
    for i in 0..items {
        let room = 10.0 - load[home[i]];
        let s = rng.gen_range(2..=5).min(room as i64).max(1) as f64;
        size[i] = s;
        load[home[i]] += s;
    }
    let mut b = MipBuilder::new(name);
    let x: Vec<Vec<usize>> = (0..items).map(|_| (0..bins).map(|_| b.add_binary(0.0)).collect()).collect();
    let y: Vec<usize> = (0..bins).map(|_| b.add_binary(1.0)).collect();
    for xi in &x {
        let r: Vec<(usize, f64)> = xi.iter().map(|&j| (j, 1.0)).collect();
        b.add_row(&r, RowSense::Eq, 1.0);
    }
    for k in 0..bins {
        let mut r: Vec<(usize, f64)> = (0..items).map(|i| (x[i][k], size[i])).collect();
        r.push((y[k], -10.0));
        b.add_row(&r, RowSense::Le, 0.0);
    }
    let mut planted = vec![0.0; items * bins + bins];
    for i in 0..items {
        planted[x[i][home[i]]] = 1.0;
    }
    for &yk in &y {
        planted[yk] = 1.0;
    }
    fixture(b, planted)
}

/// General-integer knapsack with an exact-weight equality and a budget row.
pub fn integer_knapsack_eq(name: &str, n: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=6) as f64).collect();
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(2..=9) as f64).collect();
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=9) as f64).collect();
    let mut b = MipBuilder::new(name);
    for &ci in &c {
        b.add_var(VarKind::Integer, 0.0, 10.0, -ci);
    }
    let weight: Vec<(usize, f64)> = w.iter().enumerate().map(|(i, &a)| (i, a)).collect();
    let total: f64 = w.iter().zip(&planted).map(|(a, x)| a * x).sum();
    b.add_row(&weight, RowSense::Eq, total);
    let count: Vec<(usize, f64)> = (0..n).map(|i| (i, 1.0)).collect();
    b.add_row(&count, RowSense::Le, planted.iter().sum::<f64>() + 2.0);
    fixture(b, planted)
}
