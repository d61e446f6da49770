//! Floquet-Bloch dispersion diagrams of modulated chains.
//!
//! Each allowed Bloch factor `Q` gives a cell whose shifted reduced monodromy
//! `S^H m` has multipliers `lambda`. A principal frequency follows from
//! `exp(-i omega tau) = lambda exp(-i q)`; the mode is then sampled over one
//! reduced period, extended to a full period with `phi(t + tau) = lambda S phi(t)`
//! and Fourier-decomposed. Component `j` contributes the point
//! `(q + 2 pi j / Z, omega + j nu)` with weight `|U_j|^2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::chain::{BlochCell, ChainSpec, ShiftOperator};
use crate::integrators::{identity_state, ButcherTableau, IrkStepper, LinearRhs, StepConfig};
use crate::spectral::{eig, CMatrix};
use crate::{Error, Result};

/// Relative amplitude below which the site-0 trace is replaced by the strongest site.
const WEAK_TRACE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochWave {
    pub l: usize,
    /// `2 pi l / N`.
    pub q: f64,
    /// `exp(i q Z)`.
    pub q_factor: Complex64,
}

/// The `cells` Bloch factors compatible with the periodic chain.
pub fn bloch_set(spec: &ChainSpec) -> Vec<BlochWave> {
    let n = spec.sites() as f64;
    (0..spec.cells)
        .map(|l| {
            let q = 2.0 * PI * l as f64 / n;
            BlochWave {
                l,
                q,
                q_factor: Complex64::from_polar(1.0, 2.0 * PI * l as f64 / spec.cells as f64),
            }
        })
        .collect()
}

/// Folds a wavenumber into `[-pi, pi)`.
pub fn fold(q: f64) -> f64 {
    let f = q - 2.0 * PI * ((q + PI) / (2.0 * PI)).floor();
    if f >= PI {
        f - 2.0 * PI
    } else {
        f
    }
}

#[derive(Debug, Clone)]
pub struct FloquetMode {
    pub q: f64,
    pub q_factor: Complex64,
    pub lambda: Complex64,
    /// Principal frequency, `omega tau` in `(-pi, pi]`.
    pub omega: f64,
    /// `ln|lambda| / tau`; zero up to roundoff for stable modes.
    pub growth_rate: f64,
    pub phi0: Vec<Complex64>,
    /// Fourier components `(j, U_j)` normalized so that `sum |U_j|^2 = 1`.
    pub weights: Vec<(i64, Complex64)>,
    /// Fraction of the trace energy captured by the retained window.
    pub captured: f64,
}

impl FloquetMode {
    /// `|exp(-i omega tau) - lambda exp(-i q)|` using the complex frequency.
    pub fn relation_residual(&self, tau: f64) -> f64 {
        let w = Complex64::new(self.omega, self.growth_rate);
        ((-Complex64::i() * w * tau).exp() - self.lambda * Complex64::from_polar(1.0, -self.q))
            .norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeConfig {
    pub samples_per_tau: usize,
    /// Largest `|j|` retained; `None` means `8 Z` capped by Nyquist.
    pub window: Option<usize>,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self {
            samples_per_tau: 64,
            window: None,
        }
    }
}

impl DecomposeConfig {
    fn resolve_window(&self, z: usize) -> Result<usize> {
        if self.samples_per_tau < 2 {
            return Err(Error::InvalidParameter(format!(
                "samples_per_tau must be at least 2, got {}",
                self.samples_per_tau
            )));
        }
        let nyquist = (z * self.samples_per_tau - 1) / 2;
        match self.window {
            Some(w) if w > nyquist => Err(Error::Aliasing { window: w, nyquist }),
            Some(w) => Ok(w),
            None => Ok((8 * z).min(nyquist)),
        }
    }
}

/// Complex principal frequency from a cell multiplier.
fn complex_frequency(lambda: Complex64, q: f64, tau: f64) -> Complex64 {
    let r = lambda * Complex64::from_polar(1.0, -q);
    let mut arg = r.arg();
    if arg <= -PI {
        arg = PI;
    }
    // exp(-i w tau) = r  =>  w tau = -arg(r) + i ln|r|
    let mut re = -arg;
    if re <= -PI {
        re += 2.0 * PI;
    }
    Complex64::new(re, r.norm().ln()) / tau
}

fn principal_modes(
    spec: &ChainSpec,
    wave: &BlochWave,
    shifted: &CMatrix,
) -> Result<Vec<FloquetMode>> {
    let e = eig(shifted)?;
    let tau = spec.tau();
    Ok(e.values
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let w = complex_frequency(lambda, wave.q, tau);
            FloquetMode {
                q: wave.q,
                q_factor: wave.q_factor,
                lambda,
                omega: w.re,
                growth_rate: w.im,
                phi0: e.vectors.column(k).iter().copied().collect(),
                weights: Vec::new(),
                captured: 0.0,
            }
        })
        .collect())
}

/// The `2 Z` Floquet modes of one Bloch cell, before Fourier decomposition.
pub fn modes_at(spec: &ChainSpec, wave: &BlochWave, cfg: &StepConfig) -> Result<Vec<FloquetMode>> {
    let r = crate::monodromy::cell_shifted_reduced(spec, wave.q_factor, cfg)?;
    principal_modes(spec, wave, &r.matrix)
}

/// Integrates stacked cell states over `[0, tau]`, returning the states at
/// `k tau / s` for `k = 0..s` and the final state.
fn sample_reduced_period(
    cell: &BlochCell,
    x0: &[Complex64],
    samples: usize,
    cfg: &StepConfig,
) -> Result<(Vec<Vec<Complex64>>, Vec<Complex64>)> {
    cfg.validate()?;
    let tau = cell.spec.tau();
    let steps = cfg.step_count(tau, cell.characteristic_time()).max(samples);
    let per_sample = steps.div_ceil(samples);
    let h = tau / (per_sample * samples) as f64;
    let tab = ButcherTableau::gauss_legendre6();
    let mut stepper = IrkStepper::new(&tab, *cfg, x0.len());
    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(samples);
    for k in 0..samples {
        out.push(x.clone());
        for i in 0..per_sample {
            stepper.step(cell, (k * per_sample + i) as f64 * h, h, &mut x)?;
        }
    }
    Ok((out, x))
}

/// Site-`r` displacement over a full period from samples over `[0, tau)`,
/// using `u_r(t + m tau) = lambda^m (S^m phi(t))_r`.
fn extend_trace(
    samples: &[Vec<Complex64>],
    z: usize,
    col: usize,
    site: usize,
    lambda: Complex64,
    q_factor: Complex64,
) -> Vec<Complex64> {
    let d = 2 * z;
    let mut trace = Vec::with_capacity(z * samples.len());
    let mut lam_m = Complex64::new(1.0, 0.0);
    for m in 0..z {
        let (src, phase) = if site >= m {
            (site - m, Complex64::new(1.0, 0.0))
        } else {
            (site + z - m, q_factor.conj())
        };
        for s in samples {
            trace.push(lam_m * phase * s[col * d + src]);
        }
        lam_m *= lambda;
    }
    trace
}

/// Fourier components of the demodulated site trace and the captured energy fraction.
fn decompose(
    spec: &ChainSpec,
    mode: &FloquetMode,
    samples: &[Vec<Complex64>],
    col: usize,
    window: usize,
) -> (Vec<(i64, Complex64)>, f64) {
    let z = spec.z;
    let u0_peak = samples
        .iter()
        .map(|s| s[col * 2 * z].norm())
        .fold(0.0, f64::max);
    let scale = samples[0][col * 2 * z..(col + 1) * 2 * z]
        .iter()
        .map(|v| v.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let site = if u0_peak < WEAK_TRACE * scale {
        (0..z)
            .max_by(|&a, &b| {
                mode.phi0[a]
                    .norm()
                    .total_cmp(&mode.phi0[b].norm())
                    .then(b.cmp(&a))
            })
            .unwrap_or(0)
    } else {
        0
    };
    let trace = extend_trace(samples, z, col, site, mode.lambda, mode.q_factor);
    let len = trace.len();
    let dt = spec.period() / len as f64;
    let w = Complex64::new(mode.omega, mode.growth_rate);
    let site_phase = Complex64::from_polar(1.0, -mode.q * site as f64);
    let mut buf: Vec<Complex64> = trace
        .iter()
        .enumerate()
        .map(|(k, &u)| u * (Complex64::i() * w * (k as f64 * dt)).exp() * site_phase)
        .collect();
    let total: f64 = buf.iter().map(|v| v.norm_sqr()).sum::<f64>() / len as f64;
    // U_j = mean(u~ exp(i j nu t)) is an unnormalized inverse DFT
    FftPlanner::<f64>::new()
        .plan_fft_inverse(len)
        .process(&mut buf);
    let mut weights: Vec<(i64, Complex64)> = (-(window as i64)..=window as i64)
        .map(|j| (j, buf[j.rem_euclid(len as i64) as usize] / len as f64))
        .collect();
    let kept: f64 = weights.iter().map(|(_, u)| u.norm_sqr()).sum();
    let captured = if total > 0.0 { kept / total } else { 0.0 };
    if kept > 0.0 {
        let norm = kept.sqrt();
        for (_, u) in weights.iter_mut() {
            *u /= norm;
        }
    }
    (weights, captured)
}

/// Fourier weights of a single mode, integrating only its own trajectory.
pub fn extend_and_decompose(
    spec: &ChainSpec,
    mode: &FloquetMode,
    cfg: &StepConfig,
    dcfg: &DecomposeConfig,
) -> Result<FloquetMode> {
    let window = dcfg.resolve_window(spec.z)?;
    let cell = BlochCell::new(*spec, mode.q_factor)?;
    let (samples, _) = sample_reduced_period(&cell, &mode.phi0, dcfg.samples_per_tau, cfg)?;
    let (weights, captured) = decompose(spec, mode, &samples, 0, window);
    Ok(FloquetMode {
        weights,
        captured,
        ..mode.clone()
    })
}

/// Modes of one Bloch cell with their Fourier weights, from a single
/// matrix-valued integration.
pub fn decomposed_modes_at(
    spec: &ChainSpec,
    wave: &BlochWave,
    cfg: &StepConfig,
    dcfg: &DecomposeConfig,
) -> Result<Vec<FloquetMode>> {
    spec.validate_progressive()?;
    let window = dcfg.resolve_window(spec.z)?;
    let cell = BlochCell::new(*spec, wave.q_factor)?;
    let d = 2 * spec.z;
    let (fund, m) = sample_reduced_period(
        &cell,
        &identity_state::<Complex64>(d),
        dcfg.samples_per_tau,
        cfg,
    )?;
    let m = CMatrix::from_vec(d, d, m);
    let shifted = ShiftOperator::cell(spec, wave.q_factor).apply_to_matrix(&m, true)?;
    let modes = principal_modes(spec, wave, &shifted)?;
    let vecs = CMatrix::from_fn(d, d, |r, c| modes[c].phi0[r]);
    let samples: Vec<Vec<Complex64>> = fund
        .iter()
        .map(|f| (CMatrix::from_column_slice(d, d, f) * &vecs).as_slice().to_vec())
        .collect();
    Ok(modes
        .iter()
        .enumerate()
        .map(|(c, mode)| {
            let (weights, captured) = decompose(spec, mode, &samples, c, window);
            FloquetMode {
                weights,
                captured,
                ..mode.clone()
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionPoint {
    pub q: f64,
    pub omega: f64,
    pub weight: f64,
    pub branch: usize,
    /// Growth rate of the source mode, for unstable specs.
    pub growth_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagramConfig {
    pub decompose: DecomposeConfig,
    /// Retain components with `|U_j|^2` at least this fraction of the mode's largest.
    pub weight_threshold: f64,
}

impl Default for DiagramConfig {
    fn default() -> Self {
        Self {
            decompose: DecomposeConfig::default(),
            weight_threshold: 1e-3,
        }
    }
}

fn mode_points(spec: &ChainSpec, mode: &FloquetMode, branch: usize, threshold: f64) -> Vec<DispersionPoint> {
    let peak = mode
        .weights
        .iter()
        .map(|(_, u)| u.norm_sqr())
        .fold(0.0, f64::max);
    mode.weights
        .iter()
        .filter(|(_, u)| peak > 0.0 && u.norm_sqr() >= threshold * peak)
        .map(|&(j, u)| DispersionPoint {
            q: fold(mode.q + 2.0 * PI * j as f64 / spec.z as f64),
            omega: mode.omega + j as f64 * spec.nu,
            weight: u.norm_sqr(),
            branch,
            growth_rate: mode.growth_rate,
        })
        .collect()
}

fn sort_points(points: &mut [DispersionPoint]) {
    points.sort_by(|a, b| {
        a.q.total_cmp(&b.q)
            .then(a.omega.total_cmp(&b.omega))
            .then(a.branch.cmp(&b.branch))
    });
}

/// The weighted dispersion locus of a modulated chain.
pub fn diagram(spec: &ChainSpec, cfg: &StepConfig, dcfg: &DiagramConfig) -> Result<Vec<DispersionPoint>> {
    spec.validate_progressive()?;
    let d = 2 * spec.z;
    let per_wave: Vec<Vec<DispersionPoint>> = bloch_set(spec)
        .par_iter()
        .map(|wave| {
            let modes = decomposed_modes_at(spec, wave, cfg, &dcfg.decompose)?;
            Ok(modes
                .iter()
                .enumerate()
                .flat_map(|(k, mode)| mode_points(spec, mode, wave.l * d + k, dcfg.weight_threshold))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut points: Vec<DispersionPoint> = per_wave.into_iter().flatten().collect();
    sort_points(&mut points);
    Ok(points)
}

/// Diagram of the chain with its profiles frozen at `t = 0`: a purely
/// space-periodic crystal. Frequencies come from `K(Q) v = omega^2 M v`, weights
/// from a spatial DFT of `v_n exp(-i q n)` over the cell.
pub fn frozen_diagram(spec: &ChainSpec, weight_threshold: f64) -> Result<Vec<DispersionPoint>> {
    spec.validate()?;
    let z = spec.z;
    let (_, masses) = spec.cell_profiles(0.0);
    let mut points = Vec::new();
    for wave in bloch_set(spec) {
        let cell = BlochCell::new(*spec, wave.q_factor)?;
        let k = cell.stiffness_matrix(0.0);
        let inv_sqrt: Vec<f64> = masses.iter().map(|m| 1.0 / m.sqrt()).collect();
        let dyn_mat = CMatrix::from_fn(z, z, |r, c| k[(r, c)] * inv_sqrt[r] * inv_sqrt[c]);
        let e = eig(&dyn_mat)?;
        for (b, mu) in e.values.iter().enumerate() {
            let omega = mu.re.max(0.0).sqrt();
            let v: Vec<Complex64> = (0..z)
                .map(|n| {
                    e.vectors[(n, b)] * inv_sqrt[n] * Complex64::from_polar(1.0, -wave.q * n as f64)
                })
                .collect();
            let coeffs: Vec<f64> = (0..z)
                .map(|j| {
                    let s: Complex64 = v
                        .iter()
                        .enumerate()
                        .map(|(n, &x)| x * Complex64::from_polar(1.0, -2.0 * PI * (j * n) as f64 / z as f64))
                        .sum();
                    s.norm_sqr()
                })
                .collect();
            let total: f64 = coeffs.iter().sum();
            let peak = coeffs.iter().cloned().fold(0.0, f64::max);
            for (j, &c) in coeffs.iter().enumerate() {
                if c < weight_threshold * peak {
                    continue;
                }
                let q = fold(wave.q + 2.0 * PI * j as f64 / z as f64);
                for sign in [1.0, -1.0] {
                    points.push(DispersionPoint {
                        q,
                        omega: sign * omega,
                        weight: c / total,
                        branch: wave.l * 2 * z + 2 * b + (sign < 0.0) as usize,
                        growth_rate: 0.0,
                    });
                }
            }
        }
    }
    sort_points(&mut points);
    Ok(points)
}

/// Smallest non-negative frequency at each wavenumber among points of weight at least `min_weight`.
pub fn lowest_positive_branch(points: &[DispersionPoint], min_weight: f64) -> Vec<(f64, f64)> {
    let mut best: Vec<(f64, f64)> = Vec::new();
    for p in points.iter().filter(|p| p.weight >= min_weight && p.omega >= 0.0) {
        match best.iter_mut().find(|(q, _)| (q - p.q).abs() < 1e-9) {
            Some(entry) => entry.1 = entry.1.min(p.omega),
            None => best.push((p.q, p.omega)),
        }
    }
    best.sort_by(|a, b| a.0.total_cmp(&b.0));
    best
}

/// `max_q |omega_+(q) - omega_+(-q)|` over wavenumbers present with both signs.
pub fn asymmetry_measure(points: &[DispersionPoint], min_weight: f64) -> f64 {
    let branch = lowest_positive_branch(points, min_weight);
    let mut worst: f64 = 0.0;
    for &(q, w) in &branch {
        if q <= 0.0 {
            continue;
        }
        if let Some(&(_, wm)) = branch.iter().find(|(qm, _)| (qm + q).abs() < 1e-9) {
            worst = worst.max((w - wm).abs());
        }
    }
    worst
}
