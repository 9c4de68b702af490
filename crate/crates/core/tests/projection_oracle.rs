mod common;

use afp_core::engine::{Budget, SolverConfig, StopReason};
use afp_core::fp::fp_solve;
use afp_core::lp::{solve_lp, LpStatus};
use afp_core::model::{MipBuilder, Point, RowSense, VarKind};
use afp_core::projection::{build_projection, project, ProjectionConfig, QualityNorm};
use common::checks::{projection_grid, tiny_mip};
use common::{rng, vertex_enumeration};
use rand::Rng;

#[test]
fn distance_matches_grid_at_alpha_zero() {
    let c = projection_grid(50);
    assert!(c.pass, "{}", c.line());
}

#[test]
fn blended_projection_matches_vertex_enumeration() {
    let mut r = rng(404);
    let cfg = ProjectionConfig {
        z_star: Some(2.5),
        ..Default::default()
    };
    for case in 0..150 {
        let inst = tiny_mip(&mut r);
        let active = inst.integer_vars().to_vec();
        let mut xt = inst.lower().to_vec();
        for &i in &active {
            xt[i] = r.gen_range(inst.lower()[i] as i32..=inst.upper()[i] as i32) as f64;
        }
        let alpha = [0.0, 0.3, 0.9, 1.0][case % 4];
        let lp = build_projection(&inst, &xt, &active, alpha, &cfg);
        let oracle = vertex_enumeration(&lp).expect("instance has a planted point");
        let sol = solve_lp(&lp, None);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - oracle).abs() < 1e-7, "case {case}: {} vs {oracle}", sol.objective);
        let (p, _) = project(&inst, &Point::new(xt.clone()).unwrap(), &active, alpha, &cfg, None).unwrap();
        let x = p.pair.relaxed.as_slice();
        let q = 1.0 / 2.5;
        let blended = (1.0 - alpha) * p.distance / (active.len() as f64).sqrt() + alpha * q * inst.linear_objective(x);
        if alpha < 1.0 {
            assert!((blended - oracle).abs() < 1e-7, "case {case}: {blended} vs {oracle}");
        }
    }
}

#[test]
fn quality_scales_enter_the_objective() {
    let mut b = MipBuilder::new("scales");
    let x = b.add_var(VarKind::Integer, 0.0, 4.0, 30.0);
    let y = b.add_var(VarKind::Continuous, 0.0, 4.0, 40.0);
    b.add_row(&[(x, 1.0), (y, 1.0)], RowSense::Ge, 1.0);
    let inst = b.build().unwrap();
    let coeff = ProjectionConfig {
        quality_norm: QualityNorm::CoeffNorm,
        ..Default::default()
    };
    let relaxed = ProjectionConfig {
        quality_norm: QualityNorm::RelaxedOptimum,
        z_star: Some(-30.0),
        ..Default::default()
    };
    assert_eq!(coeff.quality_scale(&inst), 1.0 / 50.0);
    assert_eq!(relaxed.quality_scale(&inst), 1.0 / 30.0);
    let lp = build_projection(&inst, &[0.0, 0.0], &[x], 0.5, &coeff);
    assert_eq!(lp.objective(), &[0.5 * 30.0 / 50.0, 0.5 * 40.0 / 50.0, 0.5]);
    assert_eq!(SolverConfig::default().quality_norm, QualityNorm::RelaxedOptimum);
}

/// Tiny objective on an unbounded continuous variable: `min 0.001 y` with
/// `y >= 10000 - 4000 x`, `x <= 2.5`. The relaxation sits at `x = 2.5`.
/// Dividing by `‖c‖` makes the objective term outweigh the distance until
/// alpha is below 2.5e-4, so the distance never gets under 0.5; dividing by
/// `max(|z*|, 1) = 1` lets the distance win once alpha drops below 0.2.
#[test]
fn coefficient_norm_stalls_where_relaxed_optimum_converges() {
    let mut b = MipBuilder::new("tiny_c");
    let x = b.add_var(VarKind::Integer, 0.0, 10.0, 0.0);
    let y = b.add_var(VarKind::Continuous, 0.0, f64::INFINITY, 1e-3);
    b.add_row(&[(y, 1.0), (x, 4000.0)], RowSense::Ge, 10000.0);
    b.add_row(&[(x, 1.0)], RowSense::Le, 2.5);
    let inst = b.build().unwrap();
    let base = SolverConfig {
        budget: Budget { n_t: 150, ..Budget::default() },
        record_events: true,
        ..Default::default()
    };
    let coeff = SolverConfig {
        quality_norm: QualityNorm::CoeffNorm,
        ..base.clone()
    };
    for seed in 0..5 {
        let z = fp_solve(&inst, &base, seed);
        assert!(z.runs[0].success, "z* mode should converge in the first run");
        assert!(z.runs[0].iterations < 40);
        let c = fp_solve(&inst, &coeff, seed);
        let r0 = &c.runs[0];
        assert!(!r0.success);
        assert_eq!(r0.stop, StopReason::Stagnation);
        let fr: Vec<f64> = c.events.iter().filter(|e| e.run == 0).map(|e| e.fractionality).collect();
        let best = fr.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((best - 0.5).abs() < 1e-9, "coefficient-norm distance never drops below 0.5, got {best}");
    }
}
