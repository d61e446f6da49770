//! Pre-baked figure pipelines. Parameters the figures leave open are fixed
//! here and printed before each run.

use std::f64::consts::PI;
use std::fs;

use modwave_core::chain::ChainSpec;
use modwave_core::continuum::{group_velocities, ContinuumProfile, ProfileShape};
use modwave_core::dispersion::{diagram, frozen_diagram, DiagramConfig};
use modwave_core::integrators::StepConfig;
use modwave_core::mathieu::{linspace, trace_grid, TRANSITION_LEVEL};
use modwave_core::monodromy::{chain_stability, UNIT_CIRCLE_TOL};
use modwave_core::simulate::{
    directionality_metrics, make_initial, run, two_ray_slopes, InitialCondition, RunConfig, Sampling,
};
use serde_json::json;

use crate::args::{Figure, ReproduceArgs};
use crate::commands::{announce, emit_bands, emit_chart, emit_dispersion, emit_field, group_velocity_json};
use crate::emit::{num, write_csv, write_json};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

pub fn reproduce(a: &ReproduceArgs, argv: &[String]) -> CliResult<()> {
    fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;
    let mut manifest = RunManifest::start("reproduce", argv);
    match a.figure {
        Figure::Fig2 => fig2(a, &mut manifest)?,
        Figure::Fig3 => fig3(a, &mut manifest)?,
        Figure::Fig4 => fig4(a, &mut manifest)?,
    }
    let path = manifest.finish(&a.out_dir.join("manifest.json"))?;
    println!("manifest {}", path.display());
    Ok(())
}

fn fig2(a: &ReproduceArgs, manifest: &mut RunManifest) -> CliResult<()> {
    let (nd, ne) = (800, 80);
    let cfg = StepConfig::default();
    println!("fig2: delta in [0, 8] x epsilon in [0, 6] on a {nd}x{ne} grid, contours at +-{TRANSITION_LEVEL}");
    manifest.parameters(&json!({
        "figure": "fig2", "delta": [0.0, 8.0], "epsilon": [0.0, 6.0], "nd": nd, "ne": ne,
        "level": TRANSITION_LEVEL, "step": cfg,
    }));
    let grid = trace_grid((0.0, 8.0), (0.0, 6.0), nd, ne, &cfg)?;
    let contours = emit_chart(
        &grid,
        TRANSITION_LEVEL,
        &a.out_dir.join("chart.csv"),
        Some(&a.out_dir.join("contours.json")),
        Some(&a.out_dir.join("chart.svg")),
        manifest,
    )?;
    println!("  {} contour polylines", contours.len());
    Ok(())
}

/// Modulation amplitude of the modulated column.
const FIG3_AMPLITUDE: f64 = 0.3;
/// Largest amplitude on a 0.1 grid that is stable at nu = 0.4 and turns
/// unstable by nu = 0.42.
const FIG3_BRINK_AMPLITUDE: f64 = 0.6;
/// Stand-in for a static profile in the time domain.
const FROZEN_NU: f64 = 1e-9;

fn fig3(a: &ReproduceArgs, manifest: &mut RunManifest) -> CliResult<()> {
    let cfg = StepConfig::default();
    let base = ChainSpec {
        z: 4,
        cells: 30,
        k0: 1.0,
        m0: 1.0,
        nu: 0.4,
        ..ChainSpec::default()
    };
    let homogeneous = base;
    let periodic = ChainSpec {
        dk: FIG3_AMPLITUDE,
        dm: FIG3_AMPLITUDE,
        ..base
    };
    let modulated = periodic;
    let brink = ChainSpec {
        dk: FIG3_BRINK_AMPLITUDE,
        dm: FIG3_BRINK_AMPLITUDE,
        ..base
    };
    let unit = 2.0 * PI / 0.4;
    let t_end = 40.0 * unit;
    println!("fig3 (time unit T = 2 pi / 0.4, runs of 40 T, 8 samples per T):");
    announce("homogeneous", &homogeneous);
    announce("periodic (frozen profile)", &periodic);
    announce("modulated", &modulated);
    announce("brink of instability", &brink);
    println!("  initial conditions: random:1 and dirac:60");
    manifest.parameters(&json!({
        "figure": "fig3", "homogeneous": homogeneous, "periodic_frozen": periodic,
        "modulated": modulated, "brink": brink, "t_end": t_end, "step": cfg,
        "diagram": {"weight_threshold": DiagramConfig::default().weight_threshold,
                    "samples_per_tau": DiagramConfig::default().decompose.samples_per_tau},
    }));
    manifest.seed = Some(1);

    let dcfg = DiagramConfig::default();
    let columns = [
        ("homogeneous", diagram(&homogeneous, &cfg, &dcfg)?),
        ("periodic", frozen_diagram(&periodic, dcfg.weight_threshold)?),
        ("modulated", diagram(&modulated, &cfg, &dcfg)?),
        ("brink", diagram(&brink, &cfg, &dcfg)?),
    ];
    for (name, points) in &columns {
        emit_dispersion(
            points,
            &a.out_dir.join(format!("dispersion_{name}.csv")),
            Some(&a.out_dir.join(format!("dispersion_{name}.svg"))),
            &format!("Dispersion: {name}"),
            manifest,
        )?;
    }

    let mut stability = serde_json::Map::new();
    for (name, spec) in [("homogeneous", homogeneous), ("modulated", modulated), ("brink", brink)] {
        let r = chain_stability(&spec, &cfg, UNIT_CIRCLE_TOL)?;
        stability.insert(
            name.into(),
            json!({"stable": r.is_stable(), "max_modulus": r.max_modulus(), "growth_rate": r.growth_rate()}),
        );
    }
    let report = a.out_dir.join("stability.json");
    write_json(&report, &stability)?;
    manifest.record(&report)?;

    let sampling = RunConfig {
        sampling: Sampling::Interval(unit / 8.0),
        ..RunConfig::default()
    };
    let fields = [
        ("periodic_dirac", ChainSpec { nu: FROZEN_NU, ..periodic }, InitialCondition::Dirac { site: 60 }),
        ("modulated_random", modulated, InitialCondition::RandomNormal { seed: 1 }),
        ("modulated_dirac", modulated, InitialCondition::Dirac { site: 60 }),
    ];
    for (name, spec, ic) in fields {
        let x0 = make_initial(&spec, &ic)?;
        let traj = run(&spec, &x0, t_end, &sampling)?;
        emit_field(
            &traj,
            &a.out_dir.join(format!("field_{name}.csv")),
            Some(&a.out_dir.join(format!("field_{name}.svg"))),
            manifest,
        )?;
    }
    Ok(())
}

fn fig4(a: &ReproduceArgs, manifest: &mut RunManifest) -> CliResult<()> {
    let cfg = StepConfig::default();
    let (c, amp, z) = (0.6, 0.95, 40usize);
    let shape = ProfileShape::Sinusoid {
        length: z as f64,
        k0: 1.0,
        dk: amp,
        rho0: 1.0,
        drho: amp,
    };
    let original = ContinuumProfile::new(shape.clone(), 0.0)?;
    let modulated = ContinuumProfile::new(shape.clone(), c)?;
    let g = group_velocities(&modulated)?;
    let spec = ChainSpec {
        z,
        cells: 100,
        k0: 1.0,
        m0: 1.0,
        dk: amp,
        dm: amp,
        nu: c * 2.0 * PI / z as f64,
        spring_offset: 0.5,
    };
    let (center, width, t_end) = (600.0, 150.0, 1600.0);
    let omegas = linspace(0.0, 4.0 * PI * g.s_g / z as f64, 201);
    println!("fig4: continuum profile L={z} k0=rho0=1 dk=drho={amp}, c={c}");
    announce("time-domain chain (springs at mass midpoints)", &spec);
    println!("  initial condition gaussian:{center}:{width}, t_end={t_end}");
    manifest.parameters(&json!({
        "figure": "fig4", "profile": shape, "c": c, "chain": spec, "step": cfg,
        "initial_condition": {"center": center, "width": width}, "t_end": t_end,
        "omega_f": [0.0, omegas.last(), omegas.len()],
    }));

    emit_bands(&original, &omegas, &cfg, &a.out_dir.join("diagram_original.csv"), manifest)?;
    let fict = a.out_dir.join("diagram_fictitious.csv");
    emit_bands(&modulated, &omegas, &cfg, &fict, manifest)?;
    // lab-frame image of the fictitious bands
    let text = fs::read_to_string(&fict).map_err(|e| CliError::io(&fict, e))?;
    let rows: Vec<Vec<String>> = text
        .lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            vec![f[5].to_string(), f[4].to_string(), f[3].to_string()]
        })
        .collect();
    let lab = a.out_dir.join("diagram_modulated.csv");
    write_csv(&lab, &["q", "omega", "propagating"], rows)?;
    manifest.record(&lab)?;

    let ic = InitialCondition::Gaussian {
        center,
        width,
        carrier_q: None,
    };
    let x0 = make_initial(&spec, &ic)?;
    let traj = run(&spec, &x0, t_end, &RunConfig::default())?;
    emit_field(&traj, &a.out_dir.join("field.csv"), Some(&a.out_dir.join("field.svg")), manifest)?;
    let metrics = directionality_metrics(&traj, center)?;
    let rays = two_ray_slopes(&traj, center)?;
    let report = json!({
        "analytic": group_velocity_json(&g, &modulated)?,
        "measured": {
            "fast_ray": rays.fast,
            "slow_ray": rays.slow,
            "samples_used": rays.samples_used,
            "center_of_energy_velocity": metrics.center_of_energy_velocity,
            "right_left_energy_ratio": metrics.right_left_energy_ratio,
        },
        "relative_error": {
            "s_plus": (rays.fast - g.s_plus).abs() / g.s_plus.abs(),
            "s_minus": (rays.slow - g.s_minus).abs() / g.s_minus.abs(),
        },
    });
    let path = a.out_dir.join("s_pm.json");
    write_json(&path, &report)?;
    manifest.record(&path)?;
    let track = a.out_dir.join("rays.csv");
    write_csv(
        &track,
        &["t", "slow", "fast"],
        rays.track.iter().map(|r| vec![num(r[0]), num(r[1]), num(r[2])]),
    )?;
    manifest.record(&track)?;
    println!(
        "  s+ analytic {:.6} measured {:.6}; s- analytic {:.6} measured {:.6}",
        g.s_plus, rays.fast, g.s_minus, rays.slow
    );
    Ok(())
}
