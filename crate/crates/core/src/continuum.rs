//! Continuum limit of a progressively modulated medium.
//!
//! A medium with periodic tension `k(x)` and density `rho(x)` modulated at speed
//! `c` has its eigenmodes in one-to-one correspondence with those of a fixed
//! fictitious medium `kbar = k (s^2 - c^2) / s^2`, `rhobar = rho s^2 / (s^2 - c^2)`,
//! where `s = sqrt(k / rho)`. Frequencies and wavenumbers map through an affine
//! shear. Everything here is closed form up to cell averages and a 2x2
//! spatial matricant.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::integrators::{irk_integrate, ButcherTableau, LinearRhs, StepConfig};
use crate::spectral::{eig, CMatrix};
use crate::{Error, Result};

pub const QUADRATURE_TOL: f64 = 1e-10;
pub const ROOT_TOL: f64 = 1e-13;
const SONIC_SCAN: usize = 4096;
const CRITICAL_SCAN: usize = 256;
const MAX_DEPTH: usize = 48;

/// Periodic tension and density over one cell of length `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileShape {
    /// `k0 + dk cos(2 pi x / L)` and `rho0 + drho cos(2 pi x / L)`.
    Sinusoid {
        #[serde(rename = "L")]
        length: f64,
        k0: f64,
        dk: f64,
        rho0: f64,
        drho: f64,
    },
    /// Samples `[x, k, rho]` on `[0, L)`, interpolated linearly and periodically.
    Sampled {
        #[serde(rename = "L")]
        length: f64,
        samples: Vec<[f64; 3]>,
    },
}

impl ProfileShape {
    pub fn length(&self) -> f64 {
        match self {
            ProfileShape::Sinusoid { length, .. } | ProfileShape::Sampled { length, .. } => *length,
        }
    }

    fn validate(&self) -> Result<()> {
        let l = self.length();
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidParameter(format!("cell length must be positive, got {l}")));
        }
        match self {
            ProfileShape::Sinusoid { k0, dk, rho0, drho, .. } => {
                if ![*k0, *dk, *rho0, *drho].iter().all(|v| v.is_finite()) {
                    return Err(Error::InvalidParameter("profile coefficients must be finite".into()));
                }
                if dk.abs() >= *k0 || drho.abs() >= *rho0 {
                    return Err(Error::InvalidParameter(format!(
                        "tension and density must stay positive: k0={k0}, dk={dk}, rho0={rho0}, drho={drho}"
                    )));
                }
            }
            ProfileShape::Sampled { samples, .. } => {
                if samples.is_empty() {
                    return Err(Error::InvalidParameter("sampled profile is empty".into()));
                }
                let mut prev = -f64::INFINITY;
                for &[x, k, rho] in samples {
                    if !(x.is_finite() && k.is_finite() && rho.is_finite()) {
                        return Err(Error::InvalidParameter("profile samples must be finite".into()));
                    }
                    if !(x > prev && x >= 0.0 && x < l) {
                        return Err(Error::InvalidParameter(format!(
                            "sample positions must increase within [0, L): got {x}"
                        )));
                    }
                    if k <= 0.0 || rho <= 0.0 {
                        return Err(Error::InvalidParameter(format!(
                            "tension and density must be positive, got k={k}, rho={rho} at x={x}"
                        )));
                    }
                    prev = x;
                }
            }
        }
        Ok(())
    }

    /// `(k(x), rho(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match self {
            ProfileShape::Sinusoid { length, k0, dk, rho0, drho } => {
                let c = (2.0 * PI * x / length).cos();
                (k0 + dk * c, rho0 + drho * c)
            }
            ProfileShape::Sampled { length, samples } => {
                let l = *length;
                let x = x.rem_euclid(l);
                let n = samples.len();
                if n == 1 {
                    return (samples[0][1], samples[0][2]);
                }
                let hi = samples.partition_point(|s| s[0] <= x);
                let (a, b, xa, xb) = if hi == 0 {
                    (samples[n - 1], samples[0], samples[n - 1][0] - l, samples[0][0])
                } else if hi == n {
                    (samples[n - 1], samples[0], samples[n - 1][0], samples[0][0] + l)
                } else {
                    (samples[hi - 1], samples[hi], samples[hi - 1][0], samples[hi][0])
                };
                let w = (x - xa) / (xb - xa);
                (a[1] + w * (b[1] - a[1]), a[2] + w * (b[2] - a[2]))
            }
        }
    }
}

/// A profile together with its modulation speed.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumProfile {
    pub shape: ProfileShape,
    pub c: f64,
    min_s: f64,
    max_s: f64,
}

impl ContinuumProfile {
    pub fn new(shape: ProfileShape, c: f64) -> Result<Self> {
        shape.validate()?;
        if !c.is_finite() {
            return Err(Error::InvalidParameter(format!("modulation speed must be finite, got {c}")));
        }
        let l = shape.length();
        let mut xs: Vec<f64> = (0..SONIC_SCAN).map(|i| l * i as f64 / SONIC_SCAN as f64).collect();
        if let ProfileShape::Sampled { samples, .. } = &shape {
            xs.extend(samples.iter().map(|s| s[0]));
        }
        let speeds: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let (k, rho) = shape.eval(x);
                (k / rho).sqrt()
            })
            .collect();
        let min_s = speeds.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_s = speeds.iter().cloned().fold(0.0, f64::max);
        let profile = Self { shape, c, min_s, max_s };
        let a = c.abs();
        let gap = speeds.iter().map(|s| (s - a).abs()).fold(f64::INFINITY, f64::min);
        if (min_s <= a && a <= max_s) || gap <= 1e-12 * max_s {
            return Err(Error::SonicCrossing { c });
        }
        Ok(profile)
    }

    pub fn with_speed(&self, c: f64) -> Result<Self> {
        Self::new(self.shape.clone(), c)
    }

    pub fn length(&self) -> f64 {
        self.shape.length()
    }

    pub fn k(&self, x: f64) -> f64 {
        self.shape.eval(x).0
    }

    pub fn rho(&self, x: f64) -> f64 {
        self.shape.eval(x).1
    }

    /// Local sound speed `sqrt(k / rho)`.
    pub fn s(&self, x: f64) -> f64 {
        let (k, rho) = self.shape.eval(x);
        (k / rho).sqrt()
    }

    /// Impedance `rho s = sqrt(k rho)`.
    pub fn z(&self, x: f64) -> f64 {
        let (k, rho) = self.shape.eval(x);
        (k * rho).sqrt()
    }

    /// Smallest and largest sound speed on the cell (sampled).
    pub fn sound_speed_range(&self) -> (f64, f64) {
        (self.min_s, self.max_s)
    }

    /// True when `|c|` exceeds the sound speed, making `kbar` and `rhobar` negative.
    pub fn is_supersonic(&self) -> bool {
        self.c.abs() > self.max_s
    }

    /// `<f>` over one cell.
    pub fn cell_average<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let l = self.length();
        Ok(integrate(&f, 0.0, l, QUADRATURE_TOL)? / l)
    }

    fn averages(&self) -> Result<Averages> {
        let c = self.c;
        let denom = |x: f64| {
            let s = self.s(x);
            s * s - c * c
        };
        Ok(Averages {
            c2: self.cell_average(|x| c * c / denom(x))?,
            c1: self.cell_average(|x| c / denom(x))?,
            s2: self.cell_average(|x| {
                let s = self.s(x);
                s * s / denom(x)
            })?,
            rhobar: self.cell_average(|x| {
                let s = self.s(x);
                self.rho(x) * s * s / denom(x)
            })?,
            inv_kbar: self.cell_average(|x| {
                let s = self.s(x);
                s * s / (self.k(x) * denom(x))
            })?,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Averages {
    /// `<c^2 / (s^2 - c^2)>`
    c2: f64,
    /// `<c / (s^2 - c^2)>`
    c1: f64,
    /// `<s^2 / (s^2 - c^2)>`
    s2: f64,
    rhobar: f64,
    inv_kbar: f64,
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

/// Adaptive Simpson quadrature with relative tolerance `rel_tol`.
fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    let mut scale = 0.0;
    let mut panels = Vec::with_capacity(PANELS);
    for i in 0..PANELS {
        let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
        let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
        if !(f0.is_finite() && fm.is_finite() && f1.is_finite()) {
            return Err(Error::Quadrature(format!("integrand is not finite near x = {x0}")));
        }
        scale += simpson(f0.abs(), fm.abs(), f1.abs(), h);
        panels.push((x0, x1, f0, fm, f1));
    }
    let tol = rel_tol * scale.max(f64::MIN_POSITIVE) / PANELS as f64;
    panels
        .into_iter()
        .map(|(x0, x1, f0, fm, f1)| {
            let whole = simpson(f0, fm, f1, x1 - x0);
            refine(f, x0, x1, f0, fm, f1, whole, tol, MAX_DEPTH)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    if !(flm.is_finite() && frm.is_finite()) {
        return Err(Error::Quadrature(format!("integrand is not finite near x = {m}")));
    }
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!(
            "adaptive Simpson did not converge on [{a}, {b}]"
        )));
    }
    Ok(refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// The fictitious non-modulated medium of a modulated profile.
#[derive(Debug, Clone)]
pub struct FictitiousMedium {
    pub profile: ContinuumProfile,
}

impl FictitiousMedium {
    pub fn kbar(&self, x: f64) -> f64 {
        let s = self.profile.s(x);
        let c = self.profile.c;
        self.profile.k(x) * (s * s - c * c) / (s * s)
    }

    pub fn rhobar(&self, x: f64) -> f64 {
        let s = self.profile.s(x);
        let c = self.profile.c;
        self.profile.rho(x) * s * s / (s * s - c * c)
    }

    /// `sqrt(kbar / rhobar) = |s - c^2 / s|`.
    pub fn sbar(&self, x: f64) -> f64 {
        (self.kbar(x) / self.rhobar(x)).sqrt()
    }

    pub fn impedance(&self, x: f64) -> f64 {
        self.profile.z(x)
    }

    /// True when `kbar` and `rhobar` are negative (supersonic modulation).
    pub fn has_negative_coefficients(&self) -> bool {
        self.profile.is_supersonic()
    }
}

pub fn fictitious(profile: &ContinuumProfile) -> FictitiousMedium {
    FictitiousMedium {
        profile: profile.clone(),
    }
}

/// `omega = Omega (1 + <c^2/(s^2-c^2)>) + c Q`, `q = Q + Omega <c/(s^2-c^2)>`.
pub fn shear_map(profile: &ContinuumProfile, omega_f: Complex64, q_f: Complex64) -> Result<(Complex64, Complex64)> {
    let a = profile.averages()?;
    Ok(shear_with(&a, profile.c, omega_f, q_f))
}

fn shear_with(a: &Averages, c: f64, omega_f: Complex64, q_f: Complex64) -> (Complex64, Complex64) {
    (omega_f * (1.0 + a.c2) + q_f * c, q_f + omega_f * a.c1)
}

/// `V' = -i Omega Sigma / kbar`, `Sigma' = -i Omega rhobar V`, with `x` as the evolution variable.
struct SpatialSystem<'a> {
    medium: &'a FictitiousMedium,
    omega: Complex64,
    min_sbar: f64,
}

impl LinearRhs<Complex64> for SpatialSystem<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let mi = -Complex64::i() * self.omega;
        dy[0] = mi * y[1] / self.medium.kbar(x);
        dy[1] = mi * y[0] * self.medium.rhobar(x);
    }

    fn eval_columns(&self, x: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let mi = -Complex64::i() * self.omega;
        let (kb, rb) = (self.medium.kbar(x), self.medium.rhobar(x));
        for (yc, dc) in y.chunks_exact(2).zip(dy.chunks_exact_mut(2)) {
            dc[0] = mi * yc[1] / kb;
            dc[1] = mi * yc[0] * rb;
        }
    }

    /// Shorter of a quarter cell and the local fictitious wavelength.
    fn characteristic_time(&self) -> f64 {
        let l = self.medium.profile.length();
        let w = self.omega.norm();
        if w == 0.0 {
            l / 4.0
        } else {
            (l / 4.0).min(2.0 * PI * self.min_sbar / w)
        }
    }
}

fn spatial_system(medium: &FictitiousMedium, omega: Complex64) -> SpatialSystem<'_> {
    let (smin, smax) = medium.profile.sound_speed_range();
    let c = medium.profile.c.abs();
    // |s - c^2/s| is monotone in s, so its minimum sits at an end of the range
    let min_sbar = (smin - c * c / smin).abs().min((smax - c * c / smax).abs());
    SpatialSystem { medium, omega, min_sbar }
}

/// The 2x2 transfer matrix of `(V, Sigma)` across one cell.
pub fn matricant(medium: &FictitiousMedium, omega: Complex64, cfg: &StepConfig) -> Result<CMatrix> {
    let sys = spatial_system(medium, omega);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let y = irk_integrate(
        &sys,
        &[one, zero, zero, one],
        0.0,
        medium.profile.length(),
        &ButcherTableau::gauss_legendre6(),
        cfg,
    )?;
    Ok(CMatrix::from_vec(2, 2, y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandPoint {
    /// Fictitious frequency `Omega`.
    pub omega_f: f64,
    /// Fictitious wavenumber `Q`, folded to `[-pi/L, pi/L)` when propagating.
    pub q_f: f64,
    /// Imaginary part of `Q` (decay rate) for evanescent solutions.
    pub q_imag: f64,
    pub propagating: bool,
}

/// Fictitious band structure from the cell matricant, two branches per frequency.
pub fn fictitious_bands(medium: &FictitiousMedium, omegas: &[f64], cfg: &StepConfig) -> Result<Vec<BandPoint>> {
    let l = medium.profile.length();
    let per: Vec<Vec<BandPoint>> = omegas
        .par_iter()
        .map(|&w| {
            let p = matricant(medium, Complex64::new(w, 0.0), cfg)?;
            let half_trace = 0.5 * p.trace();
            // eigenvalues exp(+-iQL) with cos(QL) = tr / 2
            let ql = half_trace.acos();
            let propagating = ql.im.abs() <= 1e-9 * (1.0 + ql.re.abs());
            Ok([1.0, -1.0]
                .iter()
                .map(|&sign| BandPoint {
                    omega_f: w,
                    q_f: fold_cell(sign * ql.re / l, l),
                    q_imag: (sign * ql.im / l).abs(),
                    propagating,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

fn fold_cell(q: f64, l: f64) -> f64 {
    let period = 2.0 * PI / l;
    let f = q - period * ((q + 0.5 * period) / period).floor();
    if f >= 0.5 * period {
        f - period
    } else {
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupVelocities {
    pub s_plus: f64,
    pub s_minus: f64,
    /// Acoustic group velocity of the fictitious medium.
    pub s_g: f64,
}

pub fn group_velocities(profile: &ContinuumProfile) -> Result<GroupVelocities> {
    let a = profile.averages()?;
    let s_g = (1.0 / (a.rhobar * a.inv_kbar)).sqrt();
    let c = profile.c;
    let branch = |sign: f64| -> Result<f64> {
        let den = 1.0 + sign * s_g * a.c1;
        if den.abs() < 1e-12 {
            return Err(Error::Degenerate(format!(
                "group velocity denominator vanishes at c = {c}"
            )));
        }
        Ok((c + sign * s_g * a.s2) / den)
    };
    Ok(GroupVelocities {
        s_plus: branch(1.0)?,
        s_minus: branch(-1.0)?,
        s_g,
    })
}

/// `(s_g0, b)` with `s_+- ~ +-s_g0 + b c` for slow modulation,
/// `s_g0 = 1 / sqrt(<rho><1/k>)` and `b = s_g0^2 (<rho><1/k> - <rho/k>)`.
pub fn bias_leading_order(profile: &ContinuumProfile) -> Result<(f64, f64)> {
    let rho = profile.cell_average(|x| profile.rho(x))?;
    let inv_k = profile.cell_average(|x| 1.0 / profile.k(x))?;
    let rho_over_k = profile.cell_average(|x| profile.rho(x) / profile.k(x))?;
    let sg0_sq = 1.0 / (rho * inv_k);
    Ok((sg0_sq.sqrt(), sg0_sq * (rho * inv_k - rho_over_k)))
}

/// `<s^2/(s^2-c^2)>^2 - c^2 <z s/(s^2-c^2)> <s/(z (s^2-c^2))>`; its first
/// root on `(0, min s)` is where `s_-` changes sign.
pub fn critical_function(profile: &ContinuumProfile, c: f64) -> Result<f64> {
    let d = |x: f64| {
        let s = profile.s(x);
        s * s - c * c
    };
    let lhs = profile.cell_average(|x| {
        let s = profile.s(x);
        s * s / d(x)
    })?;
    let zs = profile.cell_average(|x| profile.z(x) * profile.s(x) / d(x))?;
    let s_over_z = profile.cell_average(|x| profile.s(x) / (profile.z(x) * d(x)))?;
    Ok(lhs * lhs - c * c * zs * s_over_z)
}

/// Smallest modulation speed at which both acoustic velocities share a sign.
pub fn critical_speed(profile: &ContinuumProfile) -> Result<f64> {
    let (smin, _) = profile.sound_speed_range();
    let grid: Vec<f64> = (1..=CRITICAL_SCAN)
        .map(|i| smin * i as f64 / (CRITICAL_SCAN + 1) as f64)
        .collect();
    let values: Vec<f64> = grid
        .iter()
        .map(|&c| critical_function(profile, c))
        .collect::<Result<_>>()?;
    let mut lo = (0.0, critical_function(profile, 0.0)?);
    for (&c, &f) in grid.iter().zip(&values) {
        if f == 0.0 {
            return Ok(c);
        }
        if lo.1 * f < 0.0 {
            let failure = std::cell::Cell::new(None);
            let g = |x: f64| match critical_function(profile, x) {
                Ok(v) => v,
                Err(e) => {
                    failure.set(Some(e.to_string()));
                    f64::NAN
                }
            };
            let mut conv = roots::SimpleConvergency {
                eps: ROOT_TOL,
                max_iter: 200,
            };
            let root = roots::find_root_brent(lo.0, c, g, &mut conv)
                .map_err(|e| Error::Quadrature(format!("root refinement failed: {e}")))?;
            if let Some(msg) = failure.take() {
                return Err(Error::Quadrature(msg));
            }
            return Ok(root);
        }
        lo = (c, f);
    }
    Err(Error::NoCriticalSpeed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WillisCoefficients {
    /// `(s_+ + s_-) / 2`.
    pub mean_velocity: f64,
    /// `s_+ s_-`.
    pub velocity_product: f64,
}

impl WillisCoefficients {
    /// `W / rho_e` for `k_e u_xx + 2 W u_xt - rho_e u_tt = 0` with plane waves
    /// `exp(i(qx - omega t))`.
    pub fn coupling_ratio(&self) -> f64 {
        -self.mean_velocity
    }

    /// `k_e / rho_e`.
    pub fn stiffness_ratio(&self) -> f64 {
        -self.velocity_product
    }

    /// Roots of `v^2 - 2 w v + p = 0`, i.e. `(s_+, s_-)` up to order.
    pub fn velocities(&self) -> (f64, f64) {
        let w = self.mean_velocity;
        let r = (w * w - self.velocity_product).max(0.0).sqrt();
        (w + r, w - r)
    }
}

pub fn willis_coefficients(profile: &ContinuumProfile) -> Result<WillisCoefficients> {
    let g = group_velocities(profile)?;
    Ok(WillisCoefficients {
        mean_velocity: 0.5 * (g.s_plus + g.s_minus),
        velocity_product: g.s_plus * g.s_minus,
    })
}

/// A Bloch eigenmode of the fictitious medium.
#[derive(Debug, Clone, Copy)]
pub struct FictitiousMode {
    pub omega_f: Complex64,
    /// Complex fictitious wavenumber `Q` with `exp(i Q L)` the Bloch multiplier.
    pub q_f: Complex64,
    /// `(V(0), Sigma(0))`.
    pub state0: [Complex64; 2],
}

/// Bloch mode of the fictitious medium at frequency `Omega`; `branch` 0 or 1
/// selects the eigenvalue of the matricant in deterministic order.
pub fn fictitious_mode(
    medium: &FictitiousMedium,
    omega_f: Complex64,
    branch: usize,
    cfg: &StepConfig,
) -> Result<FictitiousMode> {
    if branch > 1 {
        return Err(Error::InvalidParameter(format!("branch must be 0 or 1, got {branch}")));
    }
    let p = matricant(medium, omega_f, cfg)?;
    let e = eig(&p)?;
    let mu = e.values[branch];
    let l = medium.profile.length();
    // mu = exp(i Q L)
    let q_f = -Complex64::i() * mu.ln() / l;
    Ok(FictitiousMode {
        omega_f,
        q_f,
        state0: [e.vectors[(0, branch)], e.vectors[(1, branch)]],
    })
}

/// Evaluates the modulated-medium eigenmode built from a fictitious mode.
pub struct ModeSampler<'a> {
    medium: &'a FictitiousMedium,
    mode: FictitiousMode,
    cfg: StepConfig,
    /// `int_0^L c / (s^2 - c^2) dx`.
    phase_per_cell: f64,
}

pub fn map_mode<'a>(
    medium: &'a FictitiousMedium,
    mode: FictitiousMode,
    cfg: &StepConfig,
) -> Result<ModeSampler<'a>> {
    let p = &medium.profile;
    let c = p.c;
    let phase_per_cell = integrate(
        &|x: f64| {
            let s = p.s(x);
            c / (s * s - c * c)
        },
        0.0,
        p.length(),
        QUADRATURE_TOL,
    )?;
    Ok(ModeSampler {
        medium,
        mode,
        cfg: *cfg,
        phase_per_cell,
    })
}

impl ModeSampler<'_> {
    /// `(V(x), Sigma(x))` of the fictitious mode, Bloch-extended from the first cell.
    pub fn fictitious_state(&self, x: f64) -> Result<[Complex64; 2]> {
        let l = self.medium.profile.length();
        let cells = (x / l).floor();
        let local = x - cells * l;
        let mut y = self.mode.state0.to_vec();
        if local > 0.0 {
            let sys = spatial_system(self.medium, self.mode.omega_f);
            y = irk_integrate(&sys, &y, 0.0, local, &ButcherTableau::gauss_legendre6(), &self.cfg)?;
        }
        let bloch = (Complex64::i() * self.mode.q_f * (cells * l)).exp();
        Ok([y[0] * bloch, y[1] * bloch])
    }

    /// `int_0^x c / (s^2 - c^2) dx` for any real `x`.
    pub fn phase_integral(&self, x: f64) -> Result<f64> {
        let p = &self.medium.profile;
        let l = p.length();
        let c = p.c;
        let cells = (x / l).floor();
        let local = x - cells * l;
        let partial = if local > 0.0 {
            integrate(
                &|y: f64| {
                    let s = p.s(y);
                    c / (s * s - c * c)
                },
                0.0,
                local,
                QUADRATURE_TOL,
            )?
        } else {
            0.0
        };
        Ok(cells * self.phase_per_cell + partial)
    }

    /// Velocity and stress `(v(x), sigma(x))` of the modulated mode at `t = 0`.
    pub fn initial(&self, x: f64) -> Result<(Complex64, Complex64)> {
        let p = &self.medium.profile;
        let [v_f, sig_f] = self.fictitious_state(x)?;
        let e = (Complex64::i() * self.mode.omega_f * self.phase_integral(x)?).exp();
        let (psi1, psi2) = (v_f * e, sig_f * e);
        let (k, rho) = p.shape.eval(x);
        let s2 = k / rho;
        let c = p.c;
        let f = s2 / (s2 - c * c);
        Ok(((psi1 - psi2 * (c / k)) * f, (psi2 - psi1 * (c * rho)) * f))
    }

    /// `(v, sigma)(x, t) = (v, sigma)(x - c t) exp(-i Omega t)`.
    pub fn eval(&self, x: f64, t: f64) -> Result<(Complex64, Complex64)> {
        let (v, s) = self.initial(x - self.medium.profile.c * t)?;
        let rot = (-Complex64::i() * self.mode.omega_f * t).exp();
        Ok((v * rot, s * rot))
    }

    /// `(omega, q)` of the modulated mode.
    pub fn frequency_wavenumber(&self) -> Result<(Complex64, Complex64)> {
        shear_map(&self.medium.profile, self.mode.omega_f, self.mode.q_f)
    }
}
