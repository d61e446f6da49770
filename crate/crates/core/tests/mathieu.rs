use std::f64::consts::PI;

use modwave_core::integrators::{identity_state, rk4_reference_integrate, StepConfig};
use modwave_core::mathieu::{
    classify, mathieu_monodromy, trace_grid, transition_contours, MathieuParams, StabilityClass, TRANSITION_LEVEL,
};
use modwave_core::spectral::RMatrix;

fn closed_form_trace(delta: f64) -> f64 {
    if delta >= 0.0 {
        2.0 * (2.0 * PI * delta.sqrt()).cos()
    } else {
        2.0 * (2.0 * PI * (-delta).sqrt()).cosh()
    }
}

fn rk4_trace(delta: f64, epsilon: f64) -> f64 {
    let p = MathieuParams::new(delta, epsilon).unwrap();
    let x = rk4_reference_integrate(&p, &identity_state::<f64>(2), 0.0, 2.0 * PI, 20_000);
    x[0] + x[3]
}

#[test]
fn free_particle_and_half_turn() {
    let cfg = StepConfig::default();
    let m = mathieu_monodromy(MathieuParams::new(0.0, 0.0).unwrap(), &cfg).unwrap();
    let expected = RMatrix::from_row_slice(2, 2, &[1.0, 2.0 * PI, 0.0, 1.0]);
    assert!((m - expected).norm() < 1e-10);
    let m = mathieu_monodromy(MathieuParams::new(0.25, 0.0).unwrap(), &cfg).unwrap();
    assert!((m.trace() + 2.0).abs() < 1e-8);
}

#[test]
fn traces_agree_with_independent_scheme() {
    let cfg = StepConfig::default();
    for (d, e, tol) in [(0.2, 0.5, 1e-6), (1.0, 1.0, 1e-5)] {
        let m = mathieu_monodromy(MathieuParams::new(d, e).unwrap(), &cfg).unwrap();
        assert!((m.trace() - rk4_trace(d, e)).abs() < tol, "({d}, {e})");
    }
}

#[test]
fn unmodulated_row_matches_closed_form() {
    let grid = trace_grid((-1.0, 3.0), (0.0, 0.0), 41, 2, &StepConfig::default()).unwrap();
    assert_eq!(grid.failures, 0);
    for (i, &d) in grid.deltas.iter().enumerate() {
        let exact = closed_form_trace(d);
        for j in 0..2 {
            assert!((grid.get(i, j) - exact).abs() < 1e-6 * exact.abs().max(1.0), "delta {d}");
        }
    }
}

#[test]
fn classification_examples() {
    let v = classify(&RMatrix::identity(2, 2), 1e-6).unwrap();
    assert_eq!(v.class, StabilityClass::Marginal);
    assert!(!v.linear_growth);
    assert_eq!(v.defect, 0.0);

    let v = classify(&RMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]), 1e-6).unwrap();
    assert_eq!(v.class, StabilityClass::Unstable);
    assert!((v.trace - 2.5).abs() < 1e-15);

    let v = classify(&RMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]), 1e-6).unwrap();
    assert_eq!(v.class, StabilityClass::Marginal);
    assert!(v.linear_growth);
}

#[test]
fn axis_endpoints_at_quarter_squares() {
    let (nd, hi) = (251, 2.5);
    let grid = trace_grid((0.0, hi), (0.0, 0.6), nd, 7, &StepConfig::default()).unwrap();
    let cell = hi / (nd - 1) as f64;
    let mut axis: Vec<f64> = transition_contours(&grid, TRANSITION_LEVEL)
        .into_iter()
        .chain(transition_contours(&grid, -TRANSITION_LEVEL))
        .flat_map(|line| line.into_iter().filter(|v| v[1] == 0.0).map(|v| v[0]))
        .collect();
    axis.sort_by(f64::total_cmp);
    for n in 0..=3 {
        let target = (n * n) as f64 / 4.0;
        assert!(
            axis.iter().any(|&d| (d - target).abs() <= cell),
            "no endpoint near {target}: {axis:?}"
        );
    }
    for &d in &axis {
        let near = (0..=3).any(|n| (d - (n * n) as f64 / 4.0).abs() <= cell);
        assert!(near, "stray endpoint at {d}");
    }
}
