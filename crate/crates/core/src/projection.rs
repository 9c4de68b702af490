//! The pump's projection step: find the point of the relaxation closest in
//! L1 to an integral point `x̃`, blended with the scaled original objective.
//!
//! For active discrete indices `A` the LP is
//!
//! ```text
//! min  (1 - α) Σ_{i∈A} d_i / √|A|  +  α c·x / Q
//! s.t. original rows and bounds on x
//!      d_i - x_i ≥ -x̃_i,  d_i + x_i ≥ x̃_i      (i ∈ A)
//! ```
//!
//! where `Q` is `‖c‖₂` or `max(|z*|, 1)`. A zero objective vector drops the
//! quality term.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{solve_lp, Basis, LpProblem, LpStatus};
use crate::model::{l1_on, MipInstance, Point, RowSense, SolutionPair};

/// Denominator of the quality term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QualityNorm {
    /// Euclidean norm of the objective vector.
    CoeffNorm,
    /// `max(|z*|, 1)` with `z*` the relaxation optimum.
    #[default]
    RelaxedOptimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub alpha0: f64,
    pub alpha_decay: f64,
    pub quality_norm: QualityNorm,
    /// Relaxation optimum in minimisation form; `None` is treated as 0.
    pub z_star: Option<f64>,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            alpha0: 1.0,
            alpha_decay: 0.9,
            quality_norm: QualityNorm::RelaxedOptimum,
            z_star: None,
        }
    }
}

impl ProjectionConfig {
    /// Multiplier applied to `c·x`: `1/Q`, or 0 when `c = 0`.
    pub fn quality_scale(&self, inst: &MipInstance) -> f64 {
        let cnorm = inst.objective().iter().map(|c| c * c).sum::<f64>().sqrt();
        if cnorm == 0.0 {
            return 0.0;
        }
        match self.quality_norm {
            QualityNorm::CoeffNorm => 1.0 / cnorm,
            QualityNorm::RelaxedOptimum => 1.0 / self.z_star.unwrap_or(0.0).abs().max(1.0),
        }
    }
}

/// Geometric decay of the objective weight, clamped to exactly 0 below 1e-12.
pub fn advance_alpha(alpha: f64, cfg: &ProjectionConfig) -> f64 {
    let next = alpha * cfg.alpha_decay;
    if next < 1e-12 {
        0.0
    } else {
        next
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProjectionError {
    #[error("projection LP is infeasible although the relaxation is not")]
    Inconsistent,
    #[error("projection LP ended with status {0:?}")]
    Lp(LpStatus),
}

/// Result of one projection.
#[derive(Debug, Clone)]
pub struct Projection {
    pub pair: SolutionPair,
    /// `Σ_{i∈A} |x̄_i - x̃_i|`.
    pub distance: f64,
    /// Sum of the auxiliary variables at the LP optimum.
    pub aux_sum: f64,
    pub lp_iterations: usize,
}

fn aux_upper(inst: &MipInstance, i: usize, target: f64) -> f64 {
    let (lo, hi) = (inst.lower()[i], inst.upper()[i]);
    if lo.is_finite() && hi.is_finite() {
        (hi - target).abs().max((target - lo).abs())
    } else {
        f64::INFINITY
    }
}

/// Builds the projection LP. Variables `0..n` are the original ones,
/// followed by one auxiliary per entry of `active`.
pub fn build_projection(
    inst: &MipInstance,
    x_tilde: &[f64],
    active: &[usize],
    alpha: f64,
    cfg: &ProjectionConfig,
) -> LpProblem {
    let mut lp = template(inst, active);
    fill(&mut lp, inst, x_tilde, active, alpha, cfg.quality_scale(inst));
    lp
}

fn template(inst: &MipInstance, active: &[usize]) -> LpProblem {
    let n = inst.num_vars();
    let k = active.len();
    let mut rows = inst.rows().clone();
    let mut sense = inst.row_sense().to_vec();
    for (t, &i) in active.iter().enumerate() {
        rows.push_row(&[(n + t, 1.0), (i, -1.0)]);
        rows.push_row(&[(n + t, 1.0), (i, 1.0)]);
        sense.push(RowSense::Ge);
        sense.push(RowSense::Ge);
    }
    let mut lower = inst.lower().to_vec();
    lower.resize(n + k, 0.0);
    let mut upper = inst.upper().to_vec();
    upper.resize(n + k, f64::INFINITY);
    let mut rhs = inst.rhs().to_vec();
    rhs.resize(rows.num_rows(), 0.0);
    LpProblem::new(vec![0.0; n + k], lower, upper, rows, sense, rhs)
        .expect("projection template mirrors a validated instance")
}

fn fill(lp: &mut LpProblem, inst: &MipInstance, x_tilde: &[f64], active: &[usize], alpha: f64, q: f64) {
    let n = inst.num_vars();
    let m = inst.num_rows();
    let dist_w = if active.is_empty() {
        0.0
    } else {
        (1.0 - alpha) / (active.len() as f64).sqrt()
    };
    let (obj, _lower, upper, rhs) = lp.vectors_mut();
    for j in 0..n {
        obj[j] = alpha * q * inst.objective()[j];
    }
    for (t, &i) in active.iter().enumerate() {
        obj[n + t] = dist_w;
        upper[n + t] = aux_upper(inst, i, x_tilde[i]);
        rhs[m + 2 * t] = -x_tilde[i];
        rhs[m + 2 * t + 1] = x_tilde[i];
    }
}

/// Reusable projection context for one instance and active set. Consecutive
/// calls share the LP structure and warm-start from the previous basis.
pub struct Projector<'a> {
    inst: &'a MipInstance,
    active: Vec<usize>,
    q: f64,
    lp: LpProblem,
    warm: Option<Basis>,
}

impl<'a> Projector<'a> {
    pub fn new(inst: &'a MipInstance, active: &[usize], cfg: &ProjectionConfig) -> Self {
        Projector {
            inst,
            active: active.to_vec(),
            q: cfg.quality_scale(inst),
            lp: template(inst, active),
            warm: None,
        }
    }

    /// Seeds the next solve with a basis from an earlier, same-shaped LP.
    pub fn with_warm(mut self, warm: Option<Basis>) -> Self {
        self.warm = warm;
        self
    }

    pub fn into_warm(self) -> Option<Basis> {
        self.warm
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn instance(&self) -> &'a MipInstance {
        self.inst
    }

    pub fn project(&mut self, x_tilde: &Point, alpha: f64) -> Result<Projection, ProjectionError> {
        fill(&mut self.lp, self.inst, x_tilde, &self.active, alpha, self.q);
        let sol = solve_lp(&self.lp, self.warm.as_ref());
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(ProjectionError::Inconsistent),
            s => return Err(ProjectionError::Lp(s)),
        }
        self.warm = sol.basis;
        let full = sol.point.expect("optimal solutions carry a point");
        let n = self.inst.num_vars();
        let aux_sum = full[n..].iter().sum();
        let relaxed = Point::from_finite(full[..n].to_vec());
        let distance = l1_on(&relaxed, x_tilde, &self.active);
        let pair = SolutionPair::new(self.inst, relaxed, x_tilde.clone(), &self.active);
        Ok(Projection {
            pair,
            distance,
            aux_sum,
            lp_iterations: sol.iterations,
        })
    }
}

/// One-shot projection; returns the projection and the final basis.
pub fn project(
    inst: &MipInstance,
    x_tilde: &Point,
    active: &[usize],
    alpha: f64,
    cfg: &ProjectionConfig,
    warm: Option<Basis>,
) -> Result<(Projection, Option<Basis>), ProjectionError> {
    let mut p = Projector::new(inst, active, cfg).with_warm(warm);
    let out = p.project(x_tilde, alpha)?;
    Ok((out, p.into_warm()))
}
