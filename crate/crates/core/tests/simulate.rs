use modwave_core::chain::{ChainSpec, FullChain};
use modwave_core::monodromy::{chain_stability, UNIT_CIRCLE_TOL};
use modwave_core::simulate::{
    directionality_metrics, growth_rate, intensity_field, log_norms, make_initial, run, InitialCondition, RunConfig,
    Sampling, Scheme,
};
use modwave_core::Error;

fn chain(z: usize, cells: usize, amp: f64, nu: f64) -> ChainSpec {
    ChainSpec {
        z,
        cells,
        dk: amp,
        dm: amp,
        nu,
        ..ChainSpec::default()
    }
}

/// Site `n` goes to `N - n`, for displacement and momentum blocks alike.
fn mirror(x: &[f64]) -> Vec<f64> {
    let n = x.len() / 2;
    let mut y = vec![0.0; x.len()];
    for block in 0..2 {
        for i in 0..n {
            y[block * n + (n - i) % n] = x[block * n + i];
        }
    }
    y
}

#[test]
fn reciprocal_chain_spreads_symmetrically() {
    let spec = chain(4, 16, 0.0, 0.4);
    let source = 30;
    let x0 = make_initial(&spec, &InitialCondition::Dirac { site: source }).unwrap();
    let traj = run(&spec, &x0, 10.0 * spec.period(), &RunConfig::default()).unwrap();
    let n = spec.sites();
    let field = intensity_field(&traj).unwrap();
    for (row, t) in traj.times.iter().enumerate() {
        let e = &field.energy[row * n..(row + 1) * n];
        let (mut right, mut left) = (0.0, 0.0);
        for d in 1..n / 2 {
            right += e[(source + d) % n];
            left += e[(source + n - d) % n];
        }
        let asym = (right - left).abs() / (right + left).max(f64::MIN_POSITIVE);
        assert!(asym < 0.01, "t {t}: {asym}");
        assert!(traj.states[row].iter().all(|v| v.abs() < 10.0));
    }
}

#[test]
fn energy_is_conserved_without_modulation() {
    let spec = chain(4, 8, 0.0, 0.4);
    let x0 = make_initial(&spec, &InitialCondition::RandomNormal { seed: 3 }).unwrap();
    let traj = run(&spec, &x0, 50.0 * spec.period(), &RunConfig::default()).unwrap();
    let chain = FullChain::new(spec).unwrap();
    let h0 = chain.energy(0.0, &x0);
    let field = intensity_field(&traj).unwrap();
    for (row, (t, x)) in traj.times.iter().zip(&traj.states).enumerate() {
        assert!((chain.energy(*t, x) - h0).abs() < 1e-6 * h0);
        assert!((field.row_energy(row) - h0).abs() < 1e-6 * h0);
    }
}

#[test]
fn reciprocal_source_does_not_drift() {
    let spec = chain(4, 50, 0.0, 0.4);
    let source = 100;
    let x0 = make_initial(&spec, &InitialCondition::Dirac { site: source }).unwrap();
    let cfg = RunConfig {
        sampling: Sampling::Interval(1.0),
        ..RunConfig::default()
    };
    let traj = run(&spec, &x0, 60.0, &cfg).unwrap();
    let m = directionality_metrics(&traj, source as f64).unwrap();
    assert!(m.center_of_energy_velocity.abs() < 0.02, "{m:?}");
    assert!((m.right_left_energy_ratio - 1.0).abs() < 1e-6);
}

#[test]
fn wraparound_is_reported() {
    let spec = chain(2, 10, 0.0, 0.4);
    let x0 = make_initial(&spec, &InitialCondition::Dirac { site: 3 }).unwrap();
    let cfg = RunConfig {
        sampling: Sampling::PerPeriod(1),
        ..RunConfig::default()
    };
    let traj = run(&spec, &x0, 5.0 * spec.period(), &cfg).unwrap();
    let r = directionality_metrics(&traj, 3.0);
    assert!(matches!(r, Err(Error::Wraparound { .. })), "{r:?}");
}

#[test]
fn reversed_modulation_mirrors_the_field() {
    let forward = ChainSpec {
        spring_offset: 0.5,
        ..chain(4, 6, 0.5, 0.4)
    };
    let backward = ChainSpec { nu: -0.4, ..forward };
    let n = forward.sites();
    let x0 = make_initial(&forward, &InitialCondition::RandomNormal { seed: 11 }).unwrap();
    let cfg = RunConfig::default();
    let a = intensity_field(&run(&forward, &x0, 3.0 * forward.period(), &cfg).unwrap()).unwrap();
    let b = intensity_field(&run(&backward, &mirror(&x0), 3.0 * forward.period(), &cfg).unwrap()).unwrap();
    assert_eq!(a.times, b.times);
    for row in 0..a.times.len() {
        for i in 0..n {
            let (u, v) = (a.abs_u[row * n + i], b.abs_u[row * n + (n - i) % n]);
            assert!((u - v).abs() < 1e-8, "row {row} site {i}");
        }
    }
}

#[test]
fn reversed_modulation_negates_metrics() {
    let forward = ChainSpec {
        spring_offset: 0.5,
        ..chain(8, 25, 0.5, 0.6 * 2.0 * std::f64::consts::PI / 8.0)
    };
    let backward = ChainSpec { nu: -forward.nu, ..forward };
    let n = forward.sites() as f64;
    let source = 100.0;
    let ic = |center| InitialCondition::Gaussian {
        center,
        width: 8.0,
        carrier_q: None,
    };
    let cfg = RunConfig {
        sampling: Sampling::Interval(2.0),
        ..RunConfig::default()
    };
    let t_end = 60.0;
    let a = run(&forward, &make_initial(&forward, &ic(source)).unwrap(), t_end, &cfg).unwrap();
    let b = run(&backward, &make_initial(&backward, &ic(n - source)).unwrap(), t_end, &cfg).unwrap();
    let ma = directionality_metrics(&a, source).unwrap();
    let mb = directionality_metrics(&b, n - source).unwrap();
    assert!((ma.center_of_energy_velocity + mb.center_of_energy_velocity).abs() < 1e-8, "{ma:?} {mb:?}");
    assert!((ma.right_left_energy_ratio * mb.right_left_energy_ratio - 1.0).abs() < 1e-6);
    assert!(ma.center_of_energy_velocity.abs() > 1e-3);
}

#[test]
fn identical_inputs_give_identical_trajectories() {
    let spec = chain(4, 5, 0.4, 0.4);
    let ic = InitialCondition::RandomNormal { seed: 5 };
    let a = run(&spec, &make_initial(&spec, &ic).unwrap(), 40.0, &RunConfig::default()).unwrap();
    let b = run(&spec, &make_initial(&spec, &ic).unwrap(), 40.0, &RunConfig::default()).unwrap();
    assert_eq!(a.times, b.times);
    assert_eq!(a.states, b.states);
}

#[test]
fn symplectic_euler_tracks_gauss_legendre() {
    let spec = chain(2, 4, 0.3, 0.5);
    let x0 = make_initial(&spec, &InitialCondition::Dirac { site: 2 }).unwrap();
    let fine = |scheme| {
        let cfg = RunConfig {
            scheme,
            step: modwave_core::integrators::StepConfig {
                steps_per_char_time: 4000,
                ..Default::default()
            },
            sampling: Sampling::PerPeriod(1),
        };
        run(&spec, &x0, spec.period(), &cfg).unwrap()
    };
    let (a, b) = (fine(Scheme::GaussLegendre6), fine(Scheme::SymplecticEuler));
    let last = a.states.len() - 1;
    for (u, v) in a.states[last].iter().zip(&b.states[last]) {
        assert!((u - v).abs() < 1e-2);
    }
}

#[test]
fn growth_follows_the_stability_verdict() {
    let cfg = RunConfig {
        sampling: Sampling::PerPeriod(1),
        ..RunConfig::default()
    };
    for (amp, nu) in [(0.3, 0.4), (0.8, 0.6)] {
        let spec = chain(4, 30, amp, nu);
        let report = chain_stability(&spec, &Default::default(), UNIT_CIRCLE_TOL).unwrap();
        let x0 = make_initial(&spec, &InitialCondition::RandomNormal { seed: 7 }).unwrap();
        let traj = run(&spec, &x0, 50.0 * spec.period(), &cfg).unwrap();
        let logs = log_norms(&traj);
        let peak = logs.iter().map(|l| (l - logs[0]).exp()).fold(0.0, f64::max);
        if report.is_stable() {
            assert!(peak <= 10.0, "({amp}, {nu}) grew {peak}");
        } else {
            let measured = growth_rate(&traj, traj.times.len() * 3 / 5);
            let expected = report.growth_rate();
            assert!((measured - expected).abs() <= 0.1 * expected, "({amp}, {nu}) {measured} vs {expected}");
        }
    }
}
