//! Linear programming oracle: `min c·x` over row-sense constraints and
//! variable bounds, solved with a bounded-variable revised simplex.

mod simplex;

use std::sync::Arc;

use thiserror::Error;

use crate::model::{MipInstance, Point, RowSense, SparseRows};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("variable {index} has lower bound above upper bound")]
    InvertedBounds { index: usize },
    #[error("coefficient references column {col} beyond {num_vars} variables")]
    ColumnOutOfRange { col: usize, num_vars: usize },
}

/// A linear program with explicit bounds and per-row senses.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: SparseRows,
    row_sense: Vec<RowSense>,
    rhs: Vec<f64>,
}

impl LpProblem {
    pub fn new(
        objective: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        rows: SparseRows,
        row_sense: Vec<RowSense>,
        rhs: Vec<f64>,
    ) -> Result<Self, LpError> {
        let n = objective.len();
        let dim = |what, got: usize, expected: usize| {
            if got == expected {
                Ok(())
            } else {
                Err(LpError::DimensionMismatch { what, expected, got })
            }
        };
        dim("lower bounds", lower.len(), n)?;
        dim("upper bounds", upper.len(), n)?;
        dim("row senses", row_sense.len(), rows.num_rows())?;
        dim("right-hand side", rhs.len(), rows.num_rows())?;
        if let Some(index) = objective.iter().position(|c| !c.is_finite()) {
            return Err(LpError::NonFinite { what: "objective coefficient", index });
        }
        if let Some(index) = rhs.iter().position(|b| !b.is_finite()) {
            return Err(LpError::NonFinite { what: "right-hand side", index });
        }
        for j in 0..n {
            if lower[j].is_nan() || upper[j].is_nan() || lower[j] > upper[j] {
                return Err(LpError::InvertedBounds { index: j });
            }
        }
        for i in 0..rows.num_rows() {
            for (c, v) in rows.row(i) {
                if c >= n {
                    return Err(LpError::ColumnOutOfRange { col: c, num_vars: n });
                }
                if !v.is_finite() {
                    return Err(LpError::NonFinite { what: "matrix coefficient", index: i });
                }
            }
        }
        Ok(LpProblem {
            objective,
            lower,
            upper,
            rows,
            row_sense,
            rhs,
        })
    }

    /// The continuous relaxation of `inst`.
    pub fn relaxation(inst: &MipInstance) -> LpProblem {
        LpProblem {
            objective: inst.objective().to_vec(),
            lower: inst.lower().to_vec(),
            upper: inst.upper().to_vec(),
            rows: inst.rows().clone(),
            row_sense: inst.row_sense().to_vec(),
            rhs: inst.rhs().to_vec(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }
    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }
    pub fn objective(&self) -> &[f64] {
        &self.objective
    }
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
    pub fn rows(&self) -> &SparseRows {
        &self.rows
    }
    pub fn row_sense(&self) -> &[RowSense] {
        &self.row_sense
    }
    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Largest row or bound violation of `x`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.num_rows() {
            let act = self.rows.row_dot(i, x);
            worst = worst.max(self.row_sense[i].violation(act, self.rhs[i]));
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }

    /// Lagrangian lower bound for row multipliers `duals`: the minimum of
    /// `c·x - y·(Ax - r)` over the variable and row-activity boxes.
    pub fn dual_bound(&self, duals: &[f64]) -> f64 {
        let mut reduced = self.objective.clone();
        for i in 0..self.num_rows() {
            for (c, v) in self.rows.row(i) {
                reduced[c] -= duals[i] * v;
            }
        }
        let box_min = |d: f64, lo: f64, hi: f64| -> f64 {
            if d > 0.0 {
                d * lo
            } else if d < 0.0 {
                d * hi
            } else {
                0.0
            }
        };
        let mut total = 0.0;
        for j in 0..self.num_vars() {
            total += box_min(reduced[j], self.lower[j], self.upper[j]);
        }
        for i in 0..self.num_rows() {
            let (lo, hi) = self.row_sense[i].activity_bounds(self.rhs[i]);
            total += box_min(duals[i], lo, hi);
        }
        total
    }

    /// Objective, bounds and right-hand side, for in-place reuse of a fixed
    /// row structure.
    pub(crate) fn vectors_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64], &mut [f64]) {
        (&mut self.objective, &mut self.lower, &mut self.upper, &mut self.rhs)
    }

    pub(crate) fn matrix_fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.num_vars().hash(&mut h);
        self.num_rows().hash(&mut h);
        for i in 0..self.num_rows() {
            for (c, v) in self.rows.row(i) {
                c.hash(&mut h);
                v.to_bits().hash(&mut h);
            }
            i.hash(&mut h);
        }
        h.finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    Free,
}

/// Opaque warm-start token: basis membership and nonbasic positions, plus
/// the basis inverse when it can be reused as is.
#[derive(Debug, Clone)]
pub struct Basis {
    pub(crate) num_vars: usize,
    pub(crate) num_rows: usize,
    pub(crate) head: Vec<usize>,
    pub(crate) status: Vec<VarStatus>,
    pub(crate) inverse: Option<(u64, Arc<Vec<f64>>)>,
}

impl Basis {
    pub fn num_basic(&self) -> usize {
        self.head.len()
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Present when `status` is `Optimal`.
    pub point: Option<Point>,
    pub objective: f64,
    /// Row multipliers at the optimum.
    pub duals: Option<Vec<f64>>,
    pub basis: Option<Basis>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solves `p`, optionally starting from `warm`.
pub fn solve_lp(p: &LpProblem, warm: Option<&Basis>) -> LpSolution {
    simplex::Simplex::new(p, warm).run()
}

/// Solves the continuous relaxation of `inst`; its objective is the `z*`
/// used by the projection normalisation.
pub fn solve_relaxation(inst: &MipInstance) -> LpSolution {
    solve_lp(&LpProblem::relaxation(inst), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MipBuilder, VarKind};

    type Row<'a> = (&'a [(usize, f64)], RowSense, f64);

    fn lp(obj: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>, rows: &[Row<'_>]) -> LpProblem {
        let mut m = SparseRows::new();
        let mut senses = Vec::new();
        let mut rhs = Vec::new();
        for (r, s, b) in rows {
            m.push_row(r);
            senses.push(*s);
            rhs.push(*b);
        }
        LpProblem::new(obj, lo, hi, m, senses, rhs).unwrap()
    }

    #[test]
    fn single_variable_optimum() {
        let p = lp(vec![-1.0], vec![0.0], vec![5.0], &[(&[(0, 1.0)], RowSense::Le, 3.0)]);
        let s = solve_lp(&p, None);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.point.unwrap()[0] - 3.0).abs() < 1e-12);
        assert!((s.objective + 3.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let p = lp(
            vec![1.0],
            vec![f64::NEG_INFINITY],
            vec![f64::INFINITY],
            &[(&[(0, 1.0)], RowSense::Ge, 2.0), (&[(0, 1.0)], RowSense::Le, 1.0)],
        );
        assert_eq!(solve_lp(&p, None).status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let p = lp(
            vec![-1.0, 0.0],
            vec![0.0, 0.0],
            vec![f64::INFINITY, 1.0],
            &[(&[(0, 1.0), (1, -1.0)], RowSense::Ge, 0.0)],
        );
        assert_eq!(solve_lp(&p, None).status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x + 2y  s.t. x + y = 4, x - y <= 1, x,y free
        let inf = f64::INFINITY;
        let p = lp(
            vec![1.0, 2.0],
            vec![-inf, -inf],
            vec![inf, inf],
            &[
                (&[(0, 1.0), (1, 1.0)], RowSense::Eq, 4.0),
                (&[(0, 1.0), (1, -1.0)], RowSense::Le, 1.0),
            ],
        );
        let s = solve_lp(&p, None);
        assert_eq!(s.status, LpStatus::Optimal);
        let x = s.point.unwrap();
        assert!((x[0] - 2.5).abs() < 1e-9 && (x[1] - 1.5).abs() < 1e-9);
        assert!((s.objective - 5.5).abs() < 1e-9);
    }

    #[test]
    fn knapsack_relaxation_matches_hand_solution() {
        // max 5a + 4b s.t. 6a + 4b <= 9, a,b in [0,1]
        // ratio order: b (1.0) then a (0.833): b = 1, a = 5/6
        let mut bld = MipBuilder::new("knap");
        let a = bld.add_var(VarKind::Integer, 0.0, 1.0, -5.0);
        let b = bld.add_var(VarKind::Integer, 0.0, 1.0, -4.0);
        bld.add_row(&[(a, 6.0), (b, 4.0)], RowSense::Le, 9.0);
        let inst = bld.build().unwrap();
        let s = solve_relaxation(&inst);
        assert_eq!(s.status, LpStatus::Optimal);
        let x = s.point.unwrap();
        assert!((x[0] - 5.0 / 6.0).abs() < 1e-9);
        assert!((x[1] - 1.0).abs() < 1e-9);
        assert!((s.objective - (-5.0 * 5.0 / 6.0 - 4.0)).abs() < 1e-9);
    }

    #[test]
    fn warm_start_from_optimal_basis_needs_at_most_one_pivot() {
        let p = lp(
            vec![-3.0, -2.0, -4.0],
            vec![0.0; 3],
            vec![4.0, 4.0, 4.0],
            &[
                (&[(0, 1.0), (1, 1.0), (2, 2.0)], RowSense::Le, 4.0),
                (&[(0, 2.0), (2, 3.0)], RowSense::Le, 5.0),
                (&[(0, 2.0), (1, 1.0), (2, 3.0)], RowSense::Le, 7.0),
            ],
        );
        let cold = solve_lp(&p, None);
        assert_eq!(cold.status, LpStatus::Optimal);
        let warm = solve_lp(&p, cold.basis.as_ref());
        assert_eq!(warm.status, LpStatus::Optimal);
        assert!(warm.iterations <= 1);
        assert!((warm.objective - cold.objective).abs() < 1e-9);
    }

    #[test]
    fn warm_start_never_changes_status() {
        let p = lp(
            vec![1.0, 1.0],
            vec![0.0, 0.0],
            vec![10.0, 10.0],
            &[(&[(0, 1.0), (1, 1.0)], RowSense::Ge, 3.0)],
        );
        let s = solve_lp(&p, None);
        let q = lp(
            vec![1.0, 1.0],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            &[(&[(0, 1.0), (1, 1.0)], RowSense::Ge, 3.0)],
        );
        assert_eq!(solve_lp(&q, s.basis.as_ref()).status, LpStatus::Infeasible);
        assert_eq!(solve_lp(&q, None).status, LpStatus::Infeasible);
    }

    #[test]
    fn duals_give_a_tight_lower_bound() {
        let p = lp(
            vec![2.0, 3.0, 1.0],
            vec![0.0; 3],
            vec![5.0; 3],
            &[
                (&[(0, 1.0), (1, 1.0), (2, 1.0)], RowSense::Ge, 4.0),
                (&[(0, 1.0), (2, -1.0)], RowSense::Eq, 1.0),
            ],
        );
        let s = solve_lp(&p, None);
        assert_eq!(s.status, LpStatus::Optimal);
        let bound = p.dual_bound(s.duals.as_ref().unwrap());
        assert!(bound <= s.objective + 1e-7);
        assert!((bound - s.objective).abs() < 1e-7);
    }

    #[test]
    fn rejects_malformed_problems() {
        let mut rows = SparseRows::new();
        rows.push_row(&[(2, 1.0)]);
        let e = LpProblem::new(vec![0.0], vec![0.0], vec![1.0], rows, vec![RowSense::Le], vec![1.0]);
        assert!(matches!(e, Err(LpError::ColumnOutOfRange { .. })));
        let e = LpProblem::new(vec![0.0], vec![2.0], vec![1.0], SparseRows::new(), vec![], vec![]);
        assert!(matches!(e, Err(LpError::InvertedBounds { .. })));
    }
}
