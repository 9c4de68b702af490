//! In-memory mixed-integer model, candidate points and the feasibility and
//! fractionality queries shared by every heuristic in the crate.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("variable {index} has lower bound {lower} above upper bound {upper}")]
    InvertedBounds { index: usize, lower: f64, upper: f64 },
    #[error("integer variable {index} ({name}) has an infinite bound")]
    UnboundedInteger { index: usize, name: String },
    #[error("non-finite value {value} at position {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("coefficient references variable {col} but the model has {num_vars} variables")]
    ColumnOutOfRange { col: usize, num_vars: usize },
    #[error("index {index} is not an integer variable")]
    NotInteger { index: usize },
}

/// Feasibility tolerances. Both default to `1e-6`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Maximum distance to the nearest integer for a value to count as integral.
    pub int: f64,
    /// Maximum row or bound violation for a point to count as inside the polyhedron.
    pub feas: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { int: 1e-6, feas: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

impl RowSense {
    /// Violation of `activity (sense) rhs`, zero when satisfied.
    pub fn violation(self, activity: f64, rhs: f64) -> f64 {
        match self {
            RowSense::Le => (activity - rhs).max(0.0),
            RowSense::Ge => (rhs - activity).max(0.0),
            RowSense::Eq => (activity - rhs).abs(),
        }
    }

    /// Activity interval `[lo, hi]` implied by the sense and right-hand side.
    pub fn activity_bounds(self, rhs: f64) -> (f64, f64) {
        match self {
            RowSense::Le => (f64::NEG_INFINITY, rhs),
            RowSense::Ge => (rhs, f64::INFINITY),
            RowSense::Eq => (rhs, rhs),
        }
    }
}

impl fmt::Display for RowSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowSense::Le => "L",
            RowSense::Ge => "G",
            RowSense::Eq => "E",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum ObjSense {
    #[default]
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Integer,
}

/// Row-major sparse matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRows {
    start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseRows {
    pub fn new() -> Self {
        SparseRows {
            start: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Appends a row. Duplicate column entries are summed and explicit zeros dropped.
    pub fn push_row(&mut self, entries: &[(usize, f64)]) {
        let mut sorted: Vec<(usize, f64)> = entries.to_vec();
        sorted.sort_by_key(|&(c, _)| c);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(sorted.len());
        for (c, v) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        for (c, v) in merged {
            if v != 0.0 {
                self.cols.push(c);
                self.vals.push(v);
            }
        }
        self.start.push(self.cols.len());
    }

    pub fn num_rows(&self) -> usize {
        self.start.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.start[i], self.start[i + 1]);
        self.cols[s..e].iter().copied().zip(self.vals[s..e].iter().copied())
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        self.row(i).map(|(c, v)| v * x[c]).sum()
    }
}

/// A mixed-integer program `min c·x + offset` over explicit row senses and
/// variable bounds, with a set of integer-constrained variables.
///
/// Immutable once built; construct with [`MipBuilder`] or the MPS reader.
#[derive(Debug, Clone, PartialEq)]
pub struct MipInstance {
    name: String,
    objective_name: String,
    sense: ObjSense,
    /// Minimisation-form objective (negated on input when `sense` is `Maximize`).
    objective: Vec<f64>,
    obj_offset: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    is_int: Vec<bool>,
    integer: Vec<usize>,
    binary: Vec<usize>,
    rows: SparseRows,
    row_sense: Vec<RowSense>,
    rhs: Vec<f64>,
    var_names: Vec<String>,
    row_names: Vec<String>,
}

impl MipInstance {
    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn objective_name(&self) -> &str {
        &self.objective_name
    }
    pub fn sense(&self) -> ObjSense {
        self.sense
    }
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }
    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }
    /// Objective in minimisation form.
    pub fn objective(&self) -> &[f64] {
        &self.objective
    }
    pub fn objective_offset(&self) -> f64 {
        self.obj_offset
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
    /// Ascending indices of integer-constrained variables.
    pub fn integer_vars(&self) -> &[usize] {
        &self.integer
    }
    /// Integer variables whose bounds are exactly `[0, 1]`.
    pub fn binary_vars(&self) -> &[usize] {
        &self.binary
    }
    pub fn is_integer(&self, i: usize) -> bool {
        self.is_int[i]
    }
    pub fn is_binary(&self, i: usize) -> bool {
        self.is_int[i] && self.lower[i] == 0.0 && self.upper[i] == 1.0
    }
    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }
    pub fn row_names(&self) -> &[String] {
        &self.row_names
    }

    /// True when every integer variable is binary.
    pub fn is_mbp(&self) -> bool {
        self.binary.len() == self.integer.len()
    }

    /// `c·x` in minimisation form, without the constant offset.
    pub fn linear_objective(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Objective value in the instance's own sense, offset included.
    pub fn reported_objective(&self, x: &[f64]) -> f64 {
        let v = self.linear_objective(x) + self.obj_offset;
        match self.sense {
            ObjSense::Minimize => v,
            ObjSense::Maximize => -v,
        }
    }

    /// Copy of the instance with `fixings` applied as `lower = upper = value`.
    pub fn with_fixed(&self, fixings: &[(usize, f64)]) -> MipInstance {
        let mut out = self.clone();
        for &(i, v) in fixings {
            out.lower[i] = v;
            out.upper[i] = v;
        }
        out.binary = out
            .integer
            .iter()
            .copied()
            .filter(|&i| out.lower[i] == 0.0 && out.upper[i] == 1.0)
            .collect();
        out
    }

    fn check_len(&self, got: usize) -> Result<(), ModelError> {
        if got != self.num_vars() {
            return Err(ModelError::DimensionMismatch {
                expected: self.num_vars(),
                got,
            });
        }
        Ok(())
    }

    /// Largest row or bound violation of `p`; zero iff `p` lies in the polyhedron.
    pub fn lp_violation(&self, p: &[f64]) -> Result<f64, ModelError> {
        self.check_len(p.len())?;
        let mut worst = 0.0f64;
        for i in 0..self.num_rows() {
            let act = self.rows.row_dot(i, p);
            worst = worst.max(self.row_sense[i].violation(act, self.rhs[i]));
        }
        for (j, &v) in p.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        Ok(worst)
    }

    /// L1 distance between `relaxed` and `integral` over `active`.
    pub fn fractionality(
        &self,
        relaxed: &[f64],
        integral: &[f64],
        active: &[usize],
    ) -> Result<f64, ModelError> {
        self.check_len(relaxed.len())?;
        self.check_len(integral.len())?;
        if let Some(&bad) = active.iter().find(|&&i| i >= self.num_vars() || !self.is_int[i]) {
            return Err(ModelError::NotInteger { index: bad });
        }
        Ok(l1_on(relaxed, integral, active))
    }

    /// Inside the polyhedron and integral on every integer variable.
    pub fn is_mip_feasible(&self, p: &[f64], tol: &Tolerances) -> bool {
        self.is_feasible_on(p, &self.integer, tol)
    }

    /// Inside the polyhedron and integral on `active`.
    pub fn is_feasible_on(&self, p: &[f64], active: &[usize], tol: &Tolerances) -> bool {
        match self.lp_violation(p) {
            Ok(v) if v <= tol.feas => active.iter().all(|&i| is_integral(p[i], tol.int)),
            _ => false,
        }
    }
}

/// Sum of `|a_i - b_i|` over `idx`, without checks.
pub fn l1_on(a: &[f64], b: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| (a[i] - b[i]).abs()).sum()
}

pub fn is_integral(v: f64, tol: f64) -> bool {
    (v - v.round()).abs() <= tol
}

/// Builds and validates a [`MipInstance`].
#[derive(Debug, Clone, Default)]
pub struct MipBuilder {
    name: String,
    objective_name: String,
    sense: ObjSense,
    objective: Vec<f64>,
    obj_offset: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    is_int: Vec<bool>,
    rows: Vec<Vec<(usize, f64)>>,
    row_sense: Vec<RowSense>,
    rhs: Vec<f64>,
    var_names: Vec<String>,
    row_names: Vec<String>,
}

impl MipBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        MipBuilder {
            name: name.into(),
            objective_name: "OBJ".to_string(),
            ..Default::default()
        }
    }

    /// Objective coefficients passed to `add_var` are in the given sense.
    pub fn sense(mut self, sense: ObjSense) -> Self {
        self.sense = sense;
        self
    }

    pub fn objective_name(mut self, name: impl Into<String>) -> Self {
        self.objective_name = name.into();
        self
    }

    pub fn objective_offset(mut self, offset: f64) -> Self {
        self.obj_offset = offset;
        self
    }

    pub fn add_var(&mut self, kind: VarKind, lower: f64, upper: f64, obj: f64) -> usize {
        let idx = self.objective.len();
        self.add_named_var(format!("x{idx}"), kind, lower, upper, obj)
    }

    pub fn add_binary(&mut self, obj: f64) -> usize {
        self.add_var(VarKind::Integer, 0.0, 1.0, obj)
    }

    pub fn add_named_var(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
        obj: f64,
    ) -> usize {
        self.objective.push(obj);
        self.lower.push(lower);
        self.upper.push(upper);
        self.is_int.push(kind == VarKind::Integer);
        self.var_names.push(name.into());
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, entries: &[(usize, f64)], sense: RowSense, rhs: f64) -> usize {
        let idx = self.rhs.len();
        self.add_named_row(format!("r{idx}"), entries, sense, rhs)
    }

    pub fn add_named_row(
        &mut self,
        name: impl Into<String>,
        entries: &[(usize, f64)],
        sense: RowSense,
        rhs: f64,
    ) -> usize {
        self.rows.push(entries.to_vec());
        self.row_sense.push(sense);
        self.rhs.push(rhs);
        self.row_names.push(name.into());
        self.rhs.len() - 1
    }

    pub fn build(self) -> Result<MipInstance, ModelError> {
        let n = self.objective.len();
        for (j, &c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(ModelError::NonFinite { index: j, value: c });
            }
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY
            {
                return Err(ModelError::InvertedBounds {
                    index: j,
                    lower: lo,
                    upper: hi,
                });
            }
            if self.is_int[j] && !(lo.is_finite() && hi.is_finite()) {
                return Err(ModelError::UnboundedInteger {
                    index: j,
                    name: self.var_names[j].clone(),
                });
            }
        }
        let mut rows = SparseRows::new();
        for (i, r) in self.rows.iter().enumerate() {
            for &(c, v) in r {
                if c >= n {
                    return Err(ModelError::ColumnOutOfRange { col: c, num_vars: n });
                }
                if !v.is_finite() {
                    return Err(ModelError::NonFinite { index: i, value: v });
                }
            }
            if !self.rhs[i].is_finite() {
                return Err(ModelError::NonFinite {
                    index: i,
                    value: self.rhs[i],
                });
            }
            rows.push_row(r);
        }
        let objective = match self.sense {
            ObjSense::Minimize => self.objective,
            ObjSense::Maximize => self.objective.iter().map(|c| -c).collect(),
        };
        let obj_offset = match self.sense {
            ObjSense::Minimize => self.obj_offset,
            ObjSense::Maximize => -self.obj_offset,
        };
        let integer: Vec<usize> = (0..n).filter(|&j| self.is_int[j]).collect();
        let binary = integer
            .iter()
            .copied()
            .filter(|&j| self.lower[j] == 0.0 && self.upper[j] == 1.0)
            .collect();
        Ok(MipInstance {
            name: self.name,
            objective_name: self.objective_name,
            sense: self.sense,
            objective,
            obj_offset,
            lower: self.lower,
            upper: self.upper,
            is_int: self.is_int,
            integer,
            binary,
            rows,
            row_sense: self.row_sense,
            rhs: self.rhs,
            var_names: self.var_names,
            row_names: self.row_names,
        })
    }
}

/// A dense vector of finite values: a relaxed, integral or candidate solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(values: Vec<f64>) -> Result<Point, ModelError> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(ModelError::NonFinite { index, value });
        }
        Ok(Point(values))
    }

    pub(crate) fn from_finite(values: Vec<f64>) -> Point {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Point(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl std::ops::Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A relaxed point inside the polyhedron paired with an integral point, plus
/// their cached L1 distance over the active discrete set.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPair {
    pub relaxed: Point,
    pub integral: Point,
    pub fractionality: f64,
    /// `c·relaxed` in minimisation form.
    pub objective_value: f64,
}

impl SolutionPair {
    pub fn new(inst: &MipInstance, relaxed: Point, integral: Point, active: &[usize]) -> Self {
        let fractionality = l1_on(&relaxed, &integral, active);
        let objective_value = inst.linear_objective(&relaxed);
        SolutionPair {
            relaxed,
            integral,
            fractionality,
            objective_value,
        }
    }

    /// Relaxed point with active coordinates replaced by their rounded values.
    pub fn snapped(&self, active: &[usize]) -> Point {
        let mut v = self.relaxed.clone();
        for &i in active {
            v.0[i] = v.0[i].round();
        }
        v
    }

    /// Relaxed point integral on every active coordinate.
    pub fn is_integral_on(&self, active: &[usize], tol: f64) -> bool {
        active.iter().all(|&i| (self.relaxed[i] - self.integral[i]).abs() <= tol)
    }
}
