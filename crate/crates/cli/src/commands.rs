//! Subcommand implementations and the output writers shared with `reproduce`.

use std::f64::consts::PI;
use std::path::Path;

use modwave_core::chain::ChainSpec;
use modwave_core::continuum::{
    critical_speed, fictitious, fictitious_bands, group_velocities, shear_map, willis_coefficients,
    ContinuumProfile, GroupVelocities,
};
use modwave_core::dispersion::{diagram, frozen_diagram, DecomposeConfig, DiagramConfig, DispersionPoint};
use modwave_core::integrators::StepConfig;
use modwave_core::mathieu::{trace_grid, transition_contours, Polyline, TraceGrid};
use modwave_core::monodromy::{
    cell_shifted_reduced, full_monodromy, stability_report, FullMonodromyMethod, MonodromyResult,
};
use modwave_core::simulate::{
    directionality_metrics, intensity_field, make_initial, run, two_ray_slopes, InitialCondition,
    RunConfig, Sampling, Scheme, Trajectory,
};
use modwave_core::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::args::{
    ContinuumArgs, DispersionArgs, MathieuArgs, MethodArg, MonodromyArgs, SchemeArg, SimulateArgs,
    DEFAULT_COUNT,
};
use crate::emit::{heatmap_svg, num, scatter_svg, to_json, write_csv, write_json, write_text, Heatmap};
use crate::error::{CliError, CliResult};
use crate::manifest::{manifest_path_for, RunManifest};

/// Grid CSV, both-level contours and an optional chart SVG.
pub fn emit_chart(
    grid: &TraceGrid,
    level: f64,
    csv: &Path,
    contours_path: Option<&Path>,
    svg: Option<&Path>,
    manifest: &mut RunManifest,
) -> CliResult<Vec<Polyline>> {
    let ne = grid.epsilons.len();
    write_csv(
        csv,
        &["delta", "epsilon", "trace"],
        (0..grid.values.len()).map(|idx| {
            let (i, j) = (idx / ne, idx % ne);
            vec![num(grid.deltas[i]), num(grid.epsilons[j]), num(grid.values[idx])]
        }),
    )?;
    manifest.record(csv)?;
    let mut contours = transition_contours(grid, level);
    contours.extend(transition_contours(grid, -level));
    if let Some(path) = contours_path {
        write_json(path, &contours)?;
        manifest.record(path)?;
    }
    if let Some(path) = svg {
        // colour the stable region |tr M| < 2; axes are delta across, epsilon up
        let nd = grid.deltas.len();
        let mut stable = vec![0.0; nd * ne];
        for i in 0..nd {
            for j in 0..ne {
                let t = grid.get(i, j);
                stable[j * nd + i] = if t.is_finite() && t.abs() < 2.0 { 1.0 } else { 0.0 };
            }
        }
        let text = heatmap_svg(
            &Heatmap {
                xs: &grid.deltas,
                ys: &grid.epsilons,
                values: &stable,
                range: (0.0, 2.5),
            },
            &contours,
            "Mathieu stability chart (shaded: |tr M| < 2)",
            "delta",
            "epsilon",
            400,
        );
        write_text(path, &text)?;
        manifest.record(path)?;
    }
    Ok(contours)
}

pub fn mathieu_chart(a: &MathieuArgs, argv: &[String]) -> CliResult<()> {
    let nd = a.delta.resolve_count(a.nd, "--nd")?;
    let ne = a.epsilon.resolve_count(a.ne, "--ne")?;
    let cfg = a.step.resolve()?;
    let mut manifest = RunManifest::start("mathieu-chart", argv);
    manifest.parameters(&json!({
        "delta": [a.delta.lo, a.delta.hi], "epsilon": [a.epsilon.lo, a.epsilon.hi],
        "nd": nd, "ne": ne, "level": a.level, "step": cfg,
    }));
    let grid = trace_grid((a.delta.lo, a.delta.hi), (a.epsilon.lo, a.epsilon.hi), nd, ne, &cfg)?;
    let contours = emit_chart(
        &grid,
        a.level,
        &a.out,
        a.contours.as_deref(),
        a.svg.as_deref(),
        &mut manifest,
    )?;
    let m = manifest.finish(&manifest_path_for(&a.out))?;
    println!(
        "{nd}x{ne} grid, {} contour polylines, {} failed cells; manifest {}",
        contours.len(),
        grid.failures,
        m.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct MonodromyReport {
    kind: &'static str,
    q_index: Option<usize>,
    period: f64,
    symplectic_deviation: f64,
    det_deviation: f64,
    multipliers: Vec<[f64; 2]>,
    stable: bool,
    max_modulus: f64,
    growth_rate: f64,
}

fn monodromy_report(res: &MonodromyResult, tol: f64, kind: &'static str, q_index: Option<usize>) -> MonodromyReport {
    let verdict = stability_report(res, tol);
    MonodromyReport {
        kind,
        q_index,
        period: res.period,
        symplectic_deviation: res.symplectic_deviation,
        det_deviation: res.det_deviation,
        multipliers: res.multipliers.iter().map(|z| [z.re, z.im]).collect(),
        stable: verdict.is_stable(),
        max_modulus: verdict.max_modulus(),
        growth_rate: verdict.growth_rate(),
    }
}

pub fn monodromy(a: &MonodromyArgs, argv: &[String]) -> CliResult<()> {
    let spec = a.spec.resolve()?;
    let cfg = a.step.resolve()?;
    let mut manifest = RunManifest::start("monodromy", argv);
    manifest.parameters(&json!({
        "spec": spec, "step": cfg, "cell": a.cell, "q_index": a.q_index,
        "method": format!("{:?}", a.method).to_lowercase(), "tol": a.tol,
    }));
    let report = if a.cell {
        let l = a.q_index.unwrap_or(0);
        if l >= spec.cells {
            return Err(CliError::usage(format!(
                "--Q-index {l} out of range for {} cells",
                spec.cells
            )));
        }
        let q = Complex64::from_polar(1.0, 2.0 * PI * l as f64 / spec.cells as f64);
        let res = cell_shifted_reduced(&spec, q, &cfg)?;
        monodromy_report(&res, a.tol, "cell", Some(l))
    } else {
        let method = match a.method {
            MethodArg::Factored => FullMonodromyMethod::Factored,
            MethodArg::Direct => FullMonodromyMethod::Direct,
        };
        let res = full_monodromy(&spec, &cfg, method)?;
        monodromy_report(&res, a.tol, "full", None)
    };
    write_json(&a.out, &report)?;
    manifest.record(&a.out)?;
    manifest.finish(&manifest_path_for(&a.out))?;
    println!(
        "{} multipliers, max |lambda| = {:.12}, {}",
        report.multipliers.len(),
        report.max_modulus,
        if report.stable { "stable" } else { "unstable" }
    );
    Ok(())
}

pub fn emit_dispersion(
    points: &[DispersionPoint],
    csv: &Path,
    svg: Option<&Path>,
    title: &str,
    manifest: &mut RunManifest,
) -> CliResult<()> {
    write_csv(
        csv,
        &["q", "omega", "weight", "branch"],
        points
            .iter()
            .map(|p| vec![num(p.q), num(p.omega), num(p.weight), p.branch.to_string()]),
    )?;
    manifest.record(csv)?;
    if let Some(path) = svg {
        let pts: Vec<(f64, f64, f64)> = points.iter().map(|p| (p.q, p.omega, p.weight)).collect();
        write_text(path, &scatter_svg(&pts, title, "q", "omega"))?;
        manifest.record(path)?;
    }
    Ok(())
}

pub fn dispersion(a: &DispersionArgs, argv: &[String]) -> CliResult<()> {
    let spec = a.spec.resolve()?;
    let cfg = a.step.resolve()?;
    let dcfg = DiagramConfig {
        decompose: DecomposeConfig {
            samples_per_tau: a.samples_per_tau,
            window: a.window,
        },
        weight_threshold: a.threshold,
    };
    let mut manifest = RunManifest::start("dispersion", argv);
    manifest.parameters(&json!({
        "spec": spec, "step": cfg, "threshold": a.threshold,
        "samples_per_tau": a.samples_per_tau, "window": a.window, "frozen": a.frozen,
    }));
    let points = if a.frozen {
        frozen_diagram(&spec, a.threshold)?
    } else {
        diagram(&spec, &cfg, &dcfg)?
    };
    emit_dispersion(&points, &a.out, a.svg.as_deref(), "Dispersion diagram", &mut manifest)?;
    manifest.finish(&manifest_path_for(&a.out))?;
    println!("{} dispersion points", points.len());
    Ok(())
}

pub fn emit_field(traj: &Trajectory, csv: &Path, svg: Option<&Path>, manifest: &mut RunManifest) -> CliResult<()> {
    let field = intensity_field(traj)?;
    let n = field.sites;
    write_csv(
        csv,
        &["t", "n", "abs_u", "energy"],
        (0..field.abs_u.len()).map(|idx| {
            vec![
                num(field.times[idx / n]),
                (idx % n).to_string(),
                num(field.abs_u[idx]),
                num(field.energy[idx]),
            ]
        }),
    )?;
    manifest.record(csv)?;
    if let Some(path) = svg {
        let sites: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let peak = field.abs_u.iter().cloned().fold(0.0, f64::max);
        let text = heatmap_svg(
            &Heatmap {
                xs: &sites,
                ys: &field.times,
                values: &field.abs_u,
                range: (0.0, if peak > 0.0 { peak } else { 1.0 }),
            },
            &[],
            "Field intensity |u_n(t)|",
            "site n",
            "t",
            300,
        );
        write_text(path, &text)?;
        manifest.record(path)?;
    }
    Ok(())
}

fn localized_source(ic: &InitialCondition) -> Option<f64> {
    match *ic {
        InitialCondition::Dirac { site } => Some(site as f64),
        InitialCondition::Gaussian { center, .. } => Some(center),
        InitialCondition::RandomNormal { .. } => None,
    }
}

pub fn simulate(a: &SimulateArgs, argv: &[String]) -> CliResult<()> {
    let spec = a.spec.resolve()?;
    let step = a.step.resolve()?;
    let ic = a.ic.0;
    let source = localized_source(&ic);
    if a.metrics.is_some() && source.is_none() {
        return Err(CliError::usage(
            "--metrics needs a localized initial condition (dirac or gaussian)",
        ));
    }
    let t_end = a.t_end.seconds(spec.period());
    let sampling = match (a.stride, a.samples_per_period) {
        (Some(s), _) => Sampling::Stride(s),
        (None, Some(p)) => Sampling::PerPeriod(p),
        (None, None) => Sampling::default(),
    };
    let cfg = RunConfig {
        scheme: match a.scheme {
            SchemeArg::Gl6 => Scheme::GaussLegendre6,
            SchemeArg::SymplecticEuler => Scheme::SymplecticEuler,
        },
        step,
        sampling,
    };
    let mut manifest = RunManifest::start("simulate", argv);
    manifest.parameters(&json!({
        "spec": spec, "step": step, "initial_condition": ic, "t_end": t_end,
        "scheme": cfg.scheme, "sampling": format!("{sampling:?}"),
    }));
    if let InitialCondition::RandomNormal { seed } = ic {
        manifest.seed = Some(seed);
    }
    let x0 = make_initial(&spec, &ic)?;
    let traj = run(&spec, &x0, t_end, &cfg)?;
    emit_field(&traj, &a.out, a.svg.as_deref(), &mut manifest)?;
    if let (Some(path), Some(src)) = (&a.metrics, source) {
        let metrics = directionality_metrics(&traj, src)?;
        let mut value = serde_json::to_value(metrics).expect("metrics serialize");
        if a.rays {
            let rays = two_ray_slopes(&traj, src)?;
            value["ray_slopes"] = json!({ "fast": rays.fast, "slow": rays.slow, "samples_used": rays.samples_used });
        }
        write_json(path, &value)?;
        manifest.record(path)?;
    }
    manifest.finish(&manifest_path_for(&a.out))?;
    println!("{} samples over t = {t_end}, step {}", traj.times.len(), traj.h);
    Ok(())
}

/// Band CSV of the fictitious medium with the lab-frame image of each point.
pub fn emit_bands(
    profile: &ContinuumProfile,
    omegas: &[f64],
    cfg: &StepConfig,
    csv: &Path,
    manifest: &mut RunManifest,
) -> CliResult<()> {
    let medium = fictitious(profile);
    let bands = fictitious_bands(&medium, omegas, cfg)?;
    let mut rows = Vec::with_capacity(bands.len());
    for b in &bands {
        let (w, q) = shear_map(
            profile,
            Complex64::new(b.omega_f, 0.0),
            Complex64::new(b.q_f, b.q_imag),
        )?;
        rows.push(vec![
            num(b.omega_f),
            num(b.q_f),
            num(b.q_imag),
            b.propagating.to_string(),
            num(w.re),
            num(q.re),
        ]);
    }
    write_csv(csv, &["omega_f", "q_f", "q_imag", "propagating", "omega", "q"], rows)?;
    manifest.record(csv)?;
    Ok(())
}

pub fn group_velocity_json(g: &GroupVelocities, profile: &ContinuumProfile) -> CliResult<serde_json::Value> {
    let w = willis_coefficients(profile)?;
    Ok(json!({
        "s_plus": g.s_plus,
        "s_minus": g.s_minus,
        "s_g": g.s_g,
        "one_way": g.s_plus * g.s_minus > 0.0,
        "willis_mean_velocity": w.mean_velocity,
        "willis_velocity_product": w.velocity_product,
        "willis_coupling_ratio": w.coupling_ratio(),
        "willis_stiffness_ratio": w.stiffness_ratio(),
    }))
}

pub fn continuum(a: &ContinuumArgs, argv: &[String]) -> CliResult<()> {
    let shape = a.profile.resolve()?;
    let cfg = a.step.resolve()?;
    let profile = ContinuumProfile::new(shape.clone(), a.c)?;
    let g = group_velocities(&profile)?;
    let l = profile.length();
    let omegas = match a.omega {
        Some(r) => r.samples(r.count.unwrap_or(DEFAULT_COUNT)),
        None => {
            // two fictitious bands at the long-wave speed
            let hi = 4.0 * PI * g.s_g.abs() / l;
            modwave_core::mathieu::linspace(0.0, hi, DEFAULT_COUNT)
        }
    };
    let mut manifest = RunManifest::start("continuum", argv);
    manifest.parameters(&json!({
        "profile": shape, "c": a.c, "step": cfg,
        "omega": [omegas.first(), omegas.last(), omegas.len()],
    }));
    emit_bands(&profile, &omegas, &cfg, &a.out, &mut manifest)?;
    let (smin, smax) = profile.sound_speed_range();
    let mut report = json!({
        "c": a.c,
        "length": l,
        "sound_speed_range": [smin, smax],
        "supersonic": profile.is_supersonic(),
    });
    if a.group_velocities {
        report["group_velocities"] = group_velocity_json(&g, &profile)?;
    }
    if a.critical {
        report["critical_speed"] = json!(critical_speed(&profile)?);
    }
    match &a.report {
        Some(path) => {
            write_json(path, &report)?;
            manifest.record(path)?;
        }
        None => println!("{}", to_json(&report)),
    }
    manifest.finish(&manifest_path_for(&a.out))?;
    Ok(())
}

/// Baked chain used by the figure pipelines, printed before running.
pub fn announce(label: &str, spec: &ChainSpec) {
    println!(
        "  {label}: Z={} cells={} k0={} m0={} dk={} dm={} nu={} spring_offset={}",
        spec.z, spec.cells, spec.k0, spec.m0, spec.dk, spec.dm, spec.nu, spec.spring_offset
    );
}
