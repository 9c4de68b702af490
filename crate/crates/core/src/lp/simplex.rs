//! Bounded-variable primal revised simplex over `A x - r = 0`, where `r` are
//! the row activities (logical variables) boxed by the row senses.
//!
//! Phase 1 minimises the sum of bound infeasibilities of the basic
//! variables, so equality rows start with an infeasible fixed logical and are
//! driven feasible like artificials. The basis inverse is kept dense and
//! updated in product form; it is rebuilt every `REFACTOR_EVERY` pivots.

use std::sync::Arc;

use super::{Basis, LpProblem, LpSolution, LpStatus, VarStatus};
use crate::model::Point;

const FEAS_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const SINGULAR_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_TRIP: usize = 30;

pub(super) struct Simplex<'a> {
    p: &'a LpProblem,
    n: usize,
    m: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    status: Vec<VarStatus>,
    head: Vec<usize>,
    binv: Vec<f64>,
    fingerprint: u64,
    since_refactor: usize,
    iterations: usize,
    alpha: Vec<f64>,
    y: Vec<f64>,
}

enum Step {
    Continue,
    Optimal,
    Infeasible,
    Unbounded,
    Trouble,
}

impl<'a> Simplex<'a> {
    pub(super) fn new(p: &'a LpProblem, warm: Option<&Basis>) -> Self {
        let n = p.num_vars();
        let m = p.num_rows();
        let mut counts = vec![0usize; n + 1];
        for i in 0..m {
            for (c, _) in p.rows().row(i) {
                counts[c + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let mut fill = counts;
        let nnz = p.rows().nnz();
        let mut col_row = vec![0usize; nnz];
        let mut col_val = vec![0f64; nnz];
        for i in 0..m {
            for (c, v) in p.rows().row(i) {
                col_row[fill[c]] = i;
                col_val[fill[c]] = v;
                fill[c] += 1;
            }
        }
        let mut lo = p.lower().to_vec();
        let mut hi = p.upper().to_vec();
        for i in 0..m {
            let (l, h) = p.row_sense()[i].activity_bounds(p.rhs()[i]);
            lo.push(l);
            hi.push(h);
        }
        let mut cost = p.objective().to_vec();
        cost.resize(n + m, 0.0);

        let mut s = Simplex {
            p,
            n,
            m,
            col_start,
            col_row,
            col_val,
            cost,
            lo,
            hi,
            x: vec![0.0; n + m],
            status: vec![VarStatus::AtLower; n + m],
            head: Vec::new(),
            binv: Vec::new(),
            fingerprint: p.matrix_fingerprint(),
            since_refactor: 0,
            iterations: 0,
            alpha: vec![0.0; m],
            y: vec![0.0; m],
        };
        let warmed = warm.is_some_and(|b| s.try_warm(b));
        if !warmed {
            s.cold_start();
        }
        s.compute_basics();
        s
    }

    fn cold_start(&mut self) {
        let (n, m) = (self.n, self.m);
        self.head = (n..n + m).collect();
        for j in 0..n {
            self.status[j] = VarStatus::AtLower;
            self.place_nonbasic(j);
        }
        for i in 0..m {
            self.status[n + i] = VarStatus::Basic;
        }
        self.binv = vec![0.0; m * m];
        for i in 0..m {
            self.binv[i * m + i] = -1.0;
        }
        self.since_refactor = 0;
    }

    fn try_warm(&mut self, b: &Basis) -> bool {
        if b.num_vars != self.n || b.num_rows != self.m || b.status.len() != self.n + self.m {
            return false;
        }
        self.head = b.head.clone();
        self.status = b.status.clone();
        for j in 0..self.n + self.m {
            if self.status[j] != VarStatus::Basic {
                self.place_nonbasic(j);
            }
        }
        match &b.inverse {
            Some((fp, inv)) if *fp == self.fingerprint && inv.len() == self.m * self.m => {
                self.binv = inv.as_ref().clone();
                self.since_refactor = 0;
                true
            }
            _ => self.refactor(),
        }
    }

    /// Puts nonbasic `j` at the bound its status names, falling back to the
    /// other bound or zero when that bound is infinite.
    fn place_nonbasic(&mut self, j: usize) {
        let (lo, hi) = (self.lo[j], self.hi[j]);
        let (st, v) = match self.status[j] {
            VarStatus::AtUpper if hi.is_finite() => (VarStatus::AtUpper, hi),
            _ if lo.is_finite() => (VarStatus::AtLower, lo),
            _ if hi.is_finite() => (VarStatus::AtUpper, hi),
            _ => (VarStatus::Free, 0.0),
        };
        self.status[j] = st;
        self.x[j] = v;
    }

    fn column(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                f(self.col_row[k], self.col_val[k]);
            }
        } else {
            f(j - self.n, -1.0);
        }
    }

    /// x_B = -B^{-1} N x_N.
    fn compute_basics(&mut self) {
        let m = self.m;
        let mut w = vec![0.0; m];
        for j in 0..self.n + m {
            if self.status[j] != VarStatus::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                self.column(j, |i, v| w[i] += v * xj);
            }
        }
        for pos in 0..m {
            let row = &self.binv[pos * m..(pos + 1) * m];
            let v: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
            self.x[self.head[pos]] = -v;
        }
    }

    /// Rebuilds the basis inverse by Gauss-Jordan elimination.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        let mut mat = vec![0.0; m * m];
        for pos in 0..m {
            let j = self.head[pos];
            let mut col = Vec::new();
            self.column(j, |i, v| col.push((i, v)));
            for (i, v) in col {
                mat[i * m + pos] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        let mut nz = Vec::with_capacity(m);
        for k in 0..m {
            let mut piv = k;
            let mut best = mat[k * m + k].abs();
            for r in k + 1..m {
                let v = mat[r * m + k].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < SINGULAR_TOL {
                return false;
            }
            if piv != k {
                for c in 0..m {
                    mat.swap(k * m + c, piv * m + c);
                    inv.swap(k * m + c, piv * m + c);
                }
            }
            let d = mat[k * m + k];
            nz.clear();
            for c in 0..m {
                if mat[k * m + c] != 0.0 || inv[k * m + c] != 0.0 {
                    mat[k * m + c] /= d;
                    inv[k * m + c] /= d;
                    nz.push(c);
                }
            }
            for r in 0..m {
                if r == k {
                    continue;
                }
                let f = mat[r * m + k];
                if f == 0.0 {
                    continue;
                }
                for &c in &nz {
                    mat[r * m + c] -= f * mat[k * m + c];
                    inv[r * m + c] -= f * inv[k * m + c];
                }
            }
        }
        self.binv = inv;
        self.since_refactor = 0;
        true
    }

    fn is_infeasible_basic(&self, j: usize) -> bool {
        let x = self.x[j];
        x < self.lo[j] - FEAS_TOL * (1.0 + self.lo[j].abs())
            || x > self.hi[j] + FEAS_TOL * (1.0 + self.hi[j].abs())
    }

    fn phase1_cost(&self, j: usize) -> f64 {
        let x = self.x[j];
        if x < self.lo[j] - FEAS_TOL * (1.0 + self.lo[j].abs()) {
            -1.0
        } else if x > self.hi[j] + FEAS_TOL * (1.0 + self.hi[j].abs()) {
            1.0
        } else {
            0.0
        }
    }

    fn compute_duals(&mut self, phase1: bool) {
        let m = self.m;
        self.y.iter_mut().for_each(|v| *v = 0.0);
        for pos in 0..m {
            let j = self.head[pos];
            let c = if phase1 { self.phase1_cost(j) } else { self.cost[j] };
            if c != 0.0 {
                let row = &self.binv[pos * m..(pos + 1) * m];
                for (yk, b) in self.y.iter_mut().zip(row) {
                    *yk += c * b;
                }
            }
        }
    }

    fn reduced_cost(&self, j: usize, phase1: bool) -> f64 {
        let c = if phase1 { 0.0 } else { self.cost[j] };
        if j < self.n {
            let mut d = c;
            for k in self.col_start[j]..self.col_start[j + 1] {
                d -= self.y[self.col_row[k]] * self.col_val[k];
            }
            d
        } else {
            c + self.y[j - self.n]
        }
    }

    /// Entering variable, its direction and reduced cost.
    fn price(&self, phase1: bool, bland: bool) -> Option<(usize, f64, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.n + self.m {
            let dir = match self.status[j] {
                VarStatus::Basic => continue,
                _ if self.lo[j] == self.hi[j] => continue,
                VarStatus::AtLower | VarStatus::AtUpper | VarStatus::Free => {
                    let d = self.reduced_cost(j, phase1);
                    match self.status[j] {
                        VarStatus::AtLower if d < -DUAL_TOL => (1.0, d),
                        VarStatus::AtUpper if d > DUAL_TOL => (-1.0, d),
                        VarStatus::Free if d.abs() > DUAL_TOL => (-d.signum(), d),
                        _ => continue,
                    }
                }
            };
            if bland {
                return Some((j, dir.0, dir.1));
            }
            let score = dir.1.abs();
            if score > best_score {
                best_score = score;
                best = Some((j, dir.0, dir.1));
            }
        }
        best
    }

    fn ftran(&mut self, q: usize) {
        let m = self.m;
        self.alpha.iter_mut().for_each(|v| *v = 0.0);
        let mut col = Vec::new();
        self.column(q, |i, v| col.push((i, v)));
        for pos in 0..m {
            let row = &self.binv[pos * m..(pos + 1) * m];
            self.alpha[pos] = col.iter().map(|&(i, v)| row[i] * v).sum();
        }
    }

    /// Blocking distance for basic position `pos` moving at `rate` per unit step.
    fn blocking(&self, pos: usize, rate: f64, phase1: bool) -> Option<(f64, bool)> {
        let j = self.head[pos];
        let (x, lo, hi) = (self.x[j], self.lo[j], self.hi[j]);
        let below = phase1 && x < lo - FEAS_TOL * (1.0 + lo.abs());
        let above = phase1 && x > hi + FEAS_TOL * (1.0 + hi.abs());
        if below {
            return (rate > 0.0).then_some((lo - x, false));
        }
        if above {
            return (rate < 0.0).then_some((x - hi, true));
        }
        if rate > 0.0 && hi.is_finite() {
            Some((hi - x, true))
        } else if rate < 0.0 && lo.is_finite() {
            Some((x - lo, false))
        } else {
            None
        }
    }

    fn iterate(&mut self, phase1: bool, bland: bool, degenerate: &mut usize) -> Step {
        let Some((q, dir, dq)) = self.price(phase1, bland) else {
            return if phase1 { Step::Infeasible } else { Step::Optimal };
        };
        self.ftran(q);
        let m = self.m;

        // Harris two-pass ratio test
        let mut t_max = f64::INFINITY;
        for pos in 0..m {
            let rate = -dir * self.alpha[pos];
            if rate.abs() <= PIVOT_TOL {
                continue;
            }
            if let Some((dist, _)) = self.blocking(pos, rate, phase1) {
                t_max = t_max.min((dist.max(0.0) + FEAS_TOL) / rate.abs());
            }
        }
        let mut leave: Option<(usize, f64, bool)> = None;
        let mut leave_key = (f64::NEG_INFINITY, usize::MAX);
        for pos in 0..m {
            let rate = -dir * self.alpha[pos];
            if rate.abs() <= PIVOT_TOL {
                continue;
            }
            if let Some((dist, to_upper)) = self.blocking(pos, rate, phase1) {
                let t = dist.max(0.0) / rate.abs();
                if t > t_max {
                    continue;
                }
                let key = if bland {
                    (-t, usize::MAX - self.head[pos])
                } else {
                    (rate.abs(), usize::MAX - self.head[pos])
                };
                if key > leave_key {
                    leave_key = key;
                    leave = Some((pos, t, to_upper));
                }
            }
        }

        let range = self.hi[q] - self.lo[q];
        let flip = range.is_finite() && leave.is_none_or(|(_, t, _)| range <= t);
        if leave.is_none() && !flip {
            return if phase1 { Step::Trouble } else { Step::Unbounded };
        }
        let t = if flip { range } else { leave.unwrap().1 };
        if t <= 1e-12 {
            *degenerate += 1;
        } else {
            *degenerate = 0;
        }

        self.x[q] += dir * t;
        for pos in 0..m {
            let a = self.alpha[pos];
            if a != 0.0 {
                self.x[self.head[pos]] -= dir * t * a;
            }
        }
        self.iterations += 1;

        if flip {
            if dir > 0.0 {
                self.status[q] = VarStatus::AtUpper;
                self.x[q] = self.hi[q];
            } else {
                self.status[q] = VarStatus::AtLower;
                self.x[q] = self.lo[q];
            }
            return Step::Continue;
        }

        let (r, _, to_upper) = leave.unwrap();
        let out = self.head[r];
        if to_upper {
            self.x[out] = self.hi[out];
            self.status[out] = VarStatus::AtUpper;
        } else {
            self.x[out] = self.lo[out];
            self.status[out] = VarStatus::AtLower;
        }
        if self.lo[out] == self.hi[out] {
            self.status[out] = VarStatus::AtLower;
        }
        self.status[q] = VarStatus::Basic;
        self.head[r] = q;

        let piv = self.alpha[r];
        let rho: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
        for pos in 0..m {
            let a = self.alpha[pos];
            if pos == r || a == 0.0 {
                continue;
            }
            let f = a / piv;
            let row = &mut self.binv[pos * m..(pos + 1) * m];
            for (b, rv) in row.iter_mut().zip(&rho) {
                *b -= f * rv;
            }
        }
        for (b, rv) in self.binv[r * m..(r + 1) * m].iter_mut().zip(&rho) {
            *b = rv / piv;
        }
        if !phase1 {
            let f = dq / piv;
            for (yk, rv) in self.y.iter_mut().zip(&rho) {
                *yk += f * rv;
            }
        }
        self.since_refactor += 1;
        Step::Continue
    }

    pub(super) fn run(mut self) -> LpSolution {
        let limit = 20_000usize.max(50 * (self.n + self.m));
        let mut degenerate = 0usize;
        let mut retried = false;
        let mut duals_fresh = false;
        loop {
            if self.iterations >= limit {
                return self.finish(LpStatus::IterLimit);
            }
            if self.since_refactor >= REFACTOR_EVERY {
                if !self.refactor() {
                    self.recover();
                }
                self.compute_basics();
                duals_fresh = false;
            }
            let phase1 = self.head.iter().any(|&j| self.is_infeasible_basic(j));
            if phase1 || !duals_fresh {
                self.compute_duals(phase1);
                duals_fresh = !phase1;
            }
            let bland = degenerate > DEGENERATE_TRIP;
            match self.iterate(phase1, bland, &mut degenerate) {
                Step::Continue => {}
                Step::Optimal | Step::Infeasible | Step::Trouble if !retried && self.since_refactor > 0 => {
                    // confirm on a fresh factorisation before concluding
                    retried = true;
                    if !self.refactor() {
                        self.recover();
                    }
                    self.compute_basics();
                    duals_fresh = false;
                }
                Step::Optimal => return self.finish(LpStatus::Optimal),
                Step::Infeasible => return self.finish(LpStatus::Infeasible),
                Step::Unbounded => return self.finish(LpStatus::Unbounded),
                Step::Trouble => return self.finish(LpStatus::IterLimit),
            }
        }
    }

    /// Falls back to the all-logical basis when the current one is singular.
    fn recover(&mut self) {
        for j in 0..self.n {
            if self.status[j] == VarStatus::Basic {
                self.status[j] = VarStatus::AtLower;
            }
        }
        self.cold_start();
        for j in 0..self.n {
            self.place_nonbasic(j);
        }
    }

    fn finish(mut self, status: LpStatus) -> LpSolution {
        let n = self.n;
        let (point, objective, duals) = if status == LpStatus::Optimal {
            let mut xs: Vec<f64> = self.x[..n].to_vec();
            for (j, v) in xs.iter_mut().enumerate() {
                *v = v.clamp(self.lo[j], self.hi[j]);
            }
            let obj = self.p.objective().iter().zip(&xs).map(|(c, v)| c * v).sum();
            self.compute_duals(false);
            (Some(Point::from_finite(xs)), obj, Some(self.y.clone()))
        } else {
            (None, f64::NAN, None)
        };
        let basis = Basis {
            num_vars: n,
            num_rows: self.m,
            head: self.head,
            status: self.status,
            inverse: Some((self.fingerprint, Arc::new(self.binv))),
        };
        LpSolution {
            status,
            point,
            objective,
            duals,
            basis: Some(basis),
            iterations: self.iterations,
        }
    }
}
