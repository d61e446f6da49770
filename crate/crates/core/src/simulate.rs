//! Time-domain simulation of finite periodic chains and wave-field diagnostics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::chain::{ChainSpec, FullChain};
use crate::integrators::{
    norm, symplectic_euler_step, ButcherTableau, IrkStepper, LinearRhs, StepConfig,
};
use crate::{Error, Result};

/// Norm growth factor that aborts a run.
pub const OVERFLOW_GROWTH: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// Independent standard normal displacements.
    RandomNormal { seed: u64 },
    /// Unit displacement at one site.
    Dirac { site: usize },
    /// `exp(-d^2 / 2 w^2) cos(q d)` with `d` the periodic distance to `center`, unit peak.
    Gaussian {
        center: f64,
        width: f64,
        carrier_q: Option<f64>,
    },
}

/// `[u; p]` for the initial condition, with zero momentum.
pub fn make_initial(spec: &ChainSpec, ic: &InitialCondition) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.sites();
    let mut x = vec![0.0; 2 * n];
    match *ic {
        InitialCondition::RandomNormal { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for v in x.iter_mut().take(n) {
                *v = StandardNormal.sample(&mut rng);
            }
        }
        InitialCondition::Dirac { site } => {
            if site >= n {
                return Err(Error::InvalidParameter(format!(
                    "site {site} out of range for a chain of {n} sites"
                )));
            }
            x[site] = 1.0;
        }
        InitialCondition::Gaussian {
            center,
            width,
            carrier_q,
        } => {
            if !(width > 0.0 && width.is_finite()) {
                return Err(Error::InvalidParameter(format!("gaussian width must be positive, got {width}")));
            }
            if !(center.is_finite() && center >= 0.0 && center < n as f64) {
                return Err(Error::InvalidParameter(format!(
                    "gaussian center {center} out of range for a chain of {n} sites"
                )));
            }
            let q = carrier_q.unwrap_or(0.0);
            for (i, v) in x.iter_mut().take(n).enumerate() {
                let d = periodic_offset(i as f64 - center, n as f64);
                *v = (-d * d / (2.0 * width * width)).exp() * (q * d).cos();
            }
            let peak = x[..n].iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if peak > 0.0 {
                for v in x.iter_mut().take(n) {
                    *v /= peak;
                }
            }
        }
    }
    Ok(x)
}

/// Nearest-image representative of `d` on a ring of length `n`, in `[-n/2, n/2)`.
fn periodic_offset(d: f64, n: f64) -> f64 {
    d - n * ((d + 0.5 * n) / n).floor()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    GaussLegendre6,
    SymplecticEuler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    /// Every `stride` integration steps.
    Stride(usize),
    /// A fixed number of samples per modulation period.
    PerPeriod(usize),
    /// Samples spaced by a fixed time interval.
    Interval(f64),
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling::PerPeriod(8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunConfig {
    pub scheme: Scheme,
    pub step: StepConfig,
    pub sampling: Sampling,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub spec: ChainSpec,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub scheme: Scheme,
    pub step: StepConfig,
    /// Integration step size.
    pub h: f64,
}

/// Step size, steps per sample and sample count for samples every `interval`,
/// rounded so that the last sample lands on `t_end`.
fn uniform_sampling(interval: f64, t_end: f64, step: &StepConfig, char_time: f64) -> (f64, usize, usize) {
    let interval = interval.min(t_end);
    let samples = ((t_end / interval).round() as usize).max(1);
    let interval = t_end / samples as f64;
    let stride = step.step_count(interval, char_time);
    (interval / stride as f64, stride, samples)
}

/// Integrates the full chain from `phi0` over `[0, t_end]`, keeping samples
/// including the initial state.
pub fn run(spec: &ChainSpec, phi0: &[f64], t_end: f64, cfg: &RunConfig) -> Result<Trajectory> {
    let chain = FullChain::new(*spec)?;
    cfg.step.validate()?;
    if phi0.len() != chain.dim() {
        return Err(Error::DimensionMismatch {
            expected: chain.dim(),
            got: phi0.len(),
        });
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end must be positive, got {t_end}")));
    }
    let char_time = chain.characteristic_time();
    let (h, stride, samples) = match cfg.sampling {
        Sampling::Stride(stride) => {
            if stride == 0 {
                return Err(Error::InvalidParameter("sample stride must be positive".into()));
            }
            let steps = cfg.step.step_count(t_end, char_time);
            let steps = steps.div_ceil(stride) * stride;
            (t_end / steps as f64, stride, steps / stride)
        }
        Sampling::PerPeriod(per) => {
            if per == 0 {
                return Err(Error::InvalidParameter("samples per period must be positive".into()));
            }
            uniform_sampling(spec.period() / per as f64, t_end, &cfg.step, char_time)
        }
        Sampling::Interval(dt) => {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidParameter(format!("sample interval must be positive, got {dt}")));
            }
            uniform_sampling(dt, t_end, &cfg.step, char_time)
        }
    };

    let tab = ButcherTableau::gauss_legendre6();
    let mut stepper = IrkStepper::new(&tab, cfg.step, phi0.len());
    let mut x = phi0.to_vec();
    let initial_norm = norm(&x);
    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    let mut step = 0usize;
    for _ in 0..samples {
        for _ in 0..stride {
            let t = step as f64 * h;
            match cfg.scheme {
                Scheme::GaussLegendre6 => stepper.step(&chain, t, h, &mut x)?,
                Scheme::SymplecticEuler => symplectic_euler_step(&chain, &mut x, t, h)?,
            }
            step += 1;
        }
        let t = step as f64 * h;
        let current = norm(&x);
        if !current.is_finite() || (initial_norm > 0.0 && current > OVERFLOW_GROWTH * initial_norm) {
            return Err(Error::Overflow {
                t,
                growth: current / initial_norm,
            });
        }
        times.push(t);
        states.push(x.clone());
    }
    Ok(Trajectory {
        spec: *spec,
        times,
        states,
        scheme: cfg.scheme,
        step: cfg.step,
        h,
    })
}

/// Row-major `(time sample, site)` grids of `|u_n|` and of the energy density.
#[derive(Debug, Clone)]
pub struct IntensityField {
    pub times: Vec<f64>,
    pub sites: usize,
    pub abs_u: Vec<f64>,
    pub energy: Vec<f64>,
}

impl IntensityField {
    pub fn row_energy(&self, row: usize) -> f64 {
        self.energy[row * self.sites..(row + 1) * self.sites].iter().sum()
    }
}

pub fn intensity_field(traj: &Trajectory) -> Result<IntensityField> {
    if traj.states.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    let chain = FullChain::new(traj.spec)?;
    let n = traj.spec.sites();
    let mut abs_u = Vec::with_capacity(n * traj.states.len());
    let mut energy = Vec::with_capacity(n * traj.states.len());
    for (t, x) in traj.times.iter().zip(&traj.states) {
        abs_u.extend(x[..n].iter().map(|v| v.abs()));
        energy.extend(chain.energy_density(*t, x));
    }
    Ok(IntensityField {
        times: traj.times.clone(),
        sites: n,
        abs_u,
        energy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionalityMetrics {
    /// Least-squares slope of the unwrapped energy centroid, in sites per unit time.
    pub center_of_energy_velocity: f64,
    /// Energy to the right of the source over energy to the left, at the last usable sample.
    pub right_left_energy_ratio: f64,
    /// Samples used before any wraparound.
    pub samples_used: usize,
}

/// Share of energy allowed in the antipodal tenth of the ring before a run counts as wrapped.
const WRAP_ENERGY: f64 = 1e-3;

/// Number of leading samples before energy reaches the far side of the ring.
fn samples_before_wrap(field: &IntensityField, source: f64) -> usize {
    rows_before_wrap(field.times.len(), field.sites, source, |row| {
        field.energy[row * field.sites..(row + 1) * field.sites].to_vec()
    })
}

fn rows_before_wrap<F: Fn(usize) -> Vec<f64>>(rows: usize, sites: usize, source: f64, density: F) -> usize {
    let n = sites as f64;
    for row in 0..rows {
        let e = density(row);
        let total: f64 = e.iter().sum();
        let far: f64 = e
            .iter()
            .enumerate()
            .filter(|(i, _)| periodic_offset(*i as f64 - source, n).abs() > 0.45 * n)
            .map(|(_, v)| v)
            .sum();
        if total > 0.0 && far > WRAP_ENERGY * total {
            return row;
        }
    }
    rows
}

/// Energy-weighted centroid of the chain, initial site estimate `source`.
fn energy_centroid(field: &IntensityField, row: usize, around: f64) -> f64 {
    let n = field.sites as f64;
    let e = &field.energy[row * field.sites..(row + 1) * field.sites];
    let total: f64 = e.iter().sum();
    if total <= 0.0 {
        return around;
    }
    let shift: f64 = e
        .iter()
        .enumerate()
        .map(|(i, w)| w * periodic_offset(i as f64 - around, n))
        .sum::<f64>()
        / total;
    around + shift
}

fn least_squares_slope(t: &[f64], x: &[f64]) -> f64 {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let xm = x.iter().sum::<f64>() / n;
    let num: f64 = t.iter().zip(x).map(|(a, b)| (a - tm) * (b - xm)).sum();
    let den: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Centroid drift and left-right energy balance of a localized excitation at `source`.
pub fn directionality_metrics(traj: &Trajectory, source: f64) -> Result<DirectionalityMetrics> {
    let field = intensity_field(traj)?;
    let usable = samples_before_wrap(&field, source);
    if usable < 3 {
        return Err(Error::Wraparound { samples: usable });
    }
    let mut centroid = Vec::with_capacity(usable);
    let mut prev = source;
    for row in 0..usable {
        // a few passes settle the nearest-image window on the centroid
        let mut c = prev;
        for _ in 0..3 {
            c = energy_centroid(&field, row, c);
        }
        centroid.push(c);
        prev = c;
    }
    let velocity = least_squares_slope(&field.times[..usable], &centroid);
    let n = field.sites as f64;
    let last = usable - 1;
    let (mut right, mut left) = (0.0, 0.0);
    for i in 0..field.sites {
        let d = periodic_offset(i as f64 - source, n);
        let e = field.energy[last * field.sites + i];
        if d > 0.0 {
            right += e;
        } else if d < 0.0 {
            left += e;
        }
    }
    Ok(DirectionalityMetrics {
        center_of_energy_velocity: velocity,
        right_left_energy_ratio: if left > 0.0 { right / left } else { f64::INFINITY },
        samples_used: usable,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RaySlopes {
    /// Speed of the faster wave packet.
    pub fast: f64,
    /// Speed of the slower wave packet.
    pub slow: f64,
    pub samples_used: usize,
    /// `[t, slow position, fast position]` for every resolved sample, relative to the source.
    pub track: Vec<[f64; 3]>,
}

/// Periodic moving average of `values` over `window` sites.
fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let n = values.len();
    let w = window.clamp(1, n);
    let half = w / 2;
    let mut acc: f64 = (0..w).map(|k| values[(k + n - half) % n]).sum();
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        *o = acc / w as f64;
        acc += values[(i + w - half) % n] - values[(i + n - half) % n];
    }
    out
}

/// Tracks the two dominant wave packets emitted by a localized long-wavelength
/// source and fits their velocities. Each sample is reduced to the square of
/// the cell-averaged displacement, which filters out the intra-cell structure;
/// packet positions are centroids of the two lobes on either side of the
/// deepest valley between the two peaks.
pub fn two_ray_slopes(traj: &Trajectory, source: f64) -> Result<RaySlopes> {
    if traj.states.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    let window = traj.spec.z;
    let n = traj.spec.sites();
    let origin = (source.round() as i64).rem_euclid(n as i64) as usize;
    // unwrapped coordinate of index k: source + (k - n/2)
    let to_site = |k: usize| (origin + k + n - n / 2) % n;
    let macro_displacement = |row: usize| -> Vec<f64> {
        let avg = moving_average(&traj.states[row][..n], window);
        (0..n).map(|k| avg[to_site(k)]).collect()
    };
    let macro_intensity = |row: usize| -> Vec<f64> {
        macro_displacement(row).into_iter().map(|v| v * v).collect()
    };
    let usable = rows_before_wrap(traj.states.len(), n, (n / 2) as f64, macro_intensity);
    if usable < 3 {
        return Err(Error::Wraparound { samples: usable });
    }
    let u0 = macro_displacement(0);
    let (mass0, centre0) = weighted_moment(&u0, 0.0, n as f64);
    let spread0 = (u0
        .iter()
        .enumerate()
        .map(|(k, v)| v * (k as f64 - centre0).powi(2))
        .sum::<f64>()
        / mass0)
        .sqrt();
    if !(mass0.abs() > 0.0 && spread0.is_finite() && spread0 > 0.0) {
        return Err(Error::Degenerate("initial cell-averaged displacement has no mass".into()));
    }
    let half_window = 3.0 * spread0;

    let mut times = Vec::new();
    let mut fast = Vec::new();
    let mut slow = Vec::new();
    for row in 1..usable {
        let u = macro_displacement(row);
        let e: Vec<f64> = u.iter().map(|v| v * v).collect();
        let i1 = argmax(&e, |_| true);
        let i2 = argmax(&e, |k| k.abs_diff(i1) as f64 > 2.0 * half_window);
        let (a, b) = if i1 < i2 { (i1, i2) } else { (i2, i1) };
        if b <= a + 1 {
            continue;
        }
        let valley = (a..=b).min_by(|&x, &y| e[x].total_cmp(&e[y])).unwrap_or(a);
        let lower_peak = e[a].min(e[b]);
        if lower_peak < 0.05 * e[a].max(e[b]) || e[valley] > 0.5 * lower_peak {
            continue;
        }
        // Fixed-width windows that follow their own centroid translate rigidly
        // with a packet, so any plateau left between the packets adds only a
        // constant offset.
        let track = |start: usize| {
            let mut c = start as f64;
            for _ in 0..20 {
                let (_, next) = weighted_moment(&u, c - half_window, c + half_window);
                if (next - c).abs() < 1e-9 {
                    return next;
                }
                c = next;
            }
            c
        };
        times.push(traj.times[row]);
        slow.push(track(a) - (n / 2) as f64);
        fast.push(track(b) - (n / 2) as f64);
    }
    if times.len() < 3 {
        return Err(Error::Degenerate(format!(
            "two separate wave packets were resolved in only {} samples",
            times.len()
        )));
    }
    // fit over the later half, where the packets are well separated
    let from = times.len() / 2;
    Ok(RaySlopes {
        fast: least_squares_slope(&times[from..], &fast[from..]),
        slow: least_squares_slope(&times[from..], &slow[from..]),
        samples_used: times.len() - from,
        track: (0..times.len()).map(|i| [times[i], slow[i], fast[i]]).collect(),
    })
}

/// Mass and first moment of `values` over `[lo, hi]`, with fractional end weights.
fn weighted_moment(values: &[f64], lo: f64, hi: f64) -> (f64, f64) {
    let lo = lo.max(0.0);
    let hi = hi.min(values.len() as f64 - 1.0);
    let (mut w, mut m) = (0.0, 0.0);
    let first = lo.ceil() as usize;
    let last = hi.floor() as usize;
    for (k, &v) in values.iter().enumerate().take(last + 1).skip(first) {
        let weight = if k == first && k == last {
            1.0
        } else if k == first {
            0.5 + (first as f64 - lo)
        } else if k == last {
            0.5 + (hi - last as f64)
        } else {
            1.0
        };
        w += weight * v;
        m += weight * v * k as f64;
    }
    (w, if w != 0.0 { m / w } else { 0.5 * (lo + hi) })
}

fn argmax<P: Fn(usize) -> bool>(e: &[f64], keep: P) -> usize {
    let mut best = 0;
    let mut val = f64::NEG_INFINITY;
    for (k, &v) in e.iter().enumerate() {
        if keep(k) && v > val {
            val = v;
            best = k;
        }
    }
    best
}

/// `ln |phi(kT)|` at whole modulation periods, from a trajectory sampled once per period.
pub fn log_norms(traj: &Trajectory) -> Vec<f64> {
    traj.states.iter().map(|x| norm(x).ln()).collect()
}

/// Least-squares growth rate of `ln |phi|` over the samples from `from` onward.
pub fn growth_rate(traj: &Trajectory, from: usize) -> f64 {
    let logs = log_norms(traj);
    let from = from.min(logs.len().saturating_sub(2));
    least_squares_slope(&traj.times[from..], &logs[from..])
}
