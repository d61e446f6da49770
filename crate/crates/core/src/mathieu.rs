//! Mathieu's equation `u' = p`, `p' = -(delta + epsilon cos t) u`.
//!
//! Monodromy over `2 pi`, stability classification from the trace, trace
//! grids over the `(delta, epsilon)` plane and marching-squares extraction of
//! the transition curves `tr M = +-2`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::integrators::{
    identity_state, irk_integrate, ButcherTableau, HamiltonianRhs, LinearRhs, StepConfig,
};
use crate::spectral::{det_real, RMatrix};
use crate::{Error, Result};

/// Default contour levels, slightly inside `+-2`.
pub const TRANSITION_LEVEL: f64 = 1.9999;
pub const MARGINAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MathieuParams {
    pub delta: f64,
    pub epsilon: f64,
}

impl MathieuParams {
    pub fn new(delta: f64, epsilon: f64) -> Result<Self> {
        if !delta.is_finite() || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Mathieu parameters must be finite: delta={delta}, epsilon={epsilon}"
            )));
        }
        Ok(Self { delta, epsilon })
    }

    fn stiffness(&self, t: f64) -> f64 {
        self.delta + self.epsilon * t.cos()
    }
}

impl LinearRhs<f64> for MathieuParams {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        dx[0] = x[1];
        dx[1] = -self.stiffness(t) * x[0];
    }

    fn eval_columns(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        let k = self.stiffness(t);
        for (xc, dc) in x.chunks_exact(2).zip(dx.chunks_exact_mut(2)) {
            dc[0] = xc[1];
            dc[1] = -k * xc[0];
        }
    }

    /// Shorter of the modulation period and `2 pi / sqrt(|delta| + |epsilon|)`.
    fn characteristic_time(&self) -> f64 {
        let rate = (self.delta.abs() + self.epsilon.abs()).sqrt();
        if rate > 1.0 {
            2.0 * PI / rate
        } else {
            2.0 * PI
        }
    }
}

impl HamiltonianRhs<f64> for MathieuParams {
    fn half_dim(&self) -> usize {
        1
    }

    fn apply_mass_inv(&self, _t: f64, p: &[f64], out: &mut [f64]) {
        out.copy_from_slice(p);
    }

    fn apply_stiffness(&self, t: f64, u: &[f64], out: &mut [f64]) {
        out[0] = self.stiffness(t) * u[0];
    }
}

/// `M = Phi(2 pi)` with columns started at `(1, 0)` and `(0, 1)`.
pub fn mathieu_monodromy(p: MathieuParams, cfg: &StepConfig) -> Result<RMatrix> {
    let tab = ButcherTableau::gauss_legendre6();
    let x = irk_integrate(&p, &identity_state::<f64>(2), 0.0, 2.0 * PI, &tab, cfg)?;
    Ok(RMatrix::from_column_slice(2, 2, &x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityClass {
    Stable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub class: StabilityClass,
    pub trace: f64,
    pub max_multiplier_modulus: f64,
    /// `|M - sign(tr) I|_F`; zero when a double multiplier has two eigenvectors.
    pub defect: f64,
    /// Marginal case with a Jordan block: solutions grow linearly.
    pub linear_growth: bool,
}

/// Classifies a `2 x 2` unit-determinant monodromy by its trace.
pub fn classify(m: &RMatrix, tol: f64) -> Result<StabilityVerdict> {
    if m.nrows() != 2 || m.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: m.nrows().max(m.ncols()),
        });
    }
    let det = det_real(m)?;
    if (det - 1.0).abs() > 1e-4 {
        return Err(Error::NonPhysical((det - 1.0).abs()));
    }
    let trace = m.trace();
    let half = 0.5 * trace;
    let disc = half * half - det;
    let max_multiplier_modulus = if disc >= 0.0 {
        half.abs() + disc.sqrt()
    } else {
        det.abs().sqrt()
    };
    let sign = if trace >= 0.0 { 1.0 } else { -1.0 };
    let defect = (m - RMatrix::identity(2, 2) * sign).norm();
    let class = if trace.abs() < 2.0 - tol {
        StabilityClass::Stable
    } else if trace.abs() > 2.0 + tol {
        StabilityClass::Unstable
    } else {
        StabilityClass::Marginal
    };
    // A diagonalizable M with |tr| within tol of 2 is a rotation by at most ~sqrt(tol).
    let linear_growth = class == StabilityClass::Marginal && defect > 10.0 * tol.sqrt();
    Ok(StabilityVerdict {
        class,
        trace,
        max_multiplier_modulus,
        defect,
        linear_growth,
    })
}

/// Uniform samples of `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Traces of the Mathieu monodromy on a tensor grid; row `i` is `delta_i`.
#[derive(Debug, Clone)]
pub struct TraceGrid {
    pub deltas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub values: Vec<f64>,
    /// Cells where the integrator failed (stored as NaN).
    pub failures: usize,
}

impl TraceGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.epsilons.len() + j]
    }
}

pub fn trace_grid(
    delta_range: (f64, f64),
    epsilon_range: (f64, f64),
    nd: usize,
    ne: usize,
    cfg: &StepConfig,
) -> Result<TraceGrid> {
    if nd < 2 || ne < 2 {
        return Err(Error::InvalidParameter(format!(
            "trace grid needs at least 2 samples per axis, got {nd}x{ne}"
        )));
    }
    cfg.validate()?;
    let deltas = linspace(delta_range.0, delta_range.1, nd);
    let epsilons = linspace(epsilon_range.0, epsilon_range.1, ne);
    let rows: Vec<(Vec<f64>, usize)> = deltas
        .par_iter()
        .map(|&d| {
            let mut failures = 0;
            let row = epsilons
                .iter()
                .map(|&e| {
                    match MathieuParams::new(d, e).and_then(|p| mathieu_monodromy(p, cfg)) {
                        Ok(m) => m.trace(),
                        Err(_) => {
                            failures += 1;
                            f64::NAN
                        }
                    }
                })
                .collect();
            (row, failures)
        })
        .collect();
    let failures = rows.iter().map(|r| r.1).sum();
    if failures > 0 {
        log::warn!("{failures} trace grid cells failed to integrate");
    }
    Ok(TraceGrid {
        deltas,
        epsilons,
        values: rows.into_iter().flat_map(|r| r.0).collect(),
        failures,
    })
}

/// A contour polyline of `(delta, epsilon)` vertices.
pub type Polyline = Vec<[f64; 2]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EdgeId {
    /// Between grid nodes `(i, j)` and `(i + 1, j)`.
    AlongDelta(usize, usize),
    /// Between grid nodes `(i, j)` and `(i, j + 1)`.
    AlongEpsilon(usize, usize),
}

/// Marching-squares level set of a trace grid, joined into polylines.
///
/// Cells touching a NaN are skipped. Saddle cells are resolved by the
/// average of their four corners.
pub fn transition_contours(grid: &TraceGrid, level: f64) -> Vec<Polyline> {
    let nd = grid.deltas.len();
    let ne = grid.epsilons.len();
    let mut links: BTreeMap<EdgeId, Vec<EdgeId>> = BTreeMap::new();
    let mut add = |a: EdgeId, b: EdgeId| {
        links.entry(a).or_default().push(b);
        links.entry(b).or_default().push(a);
    };

    for i in 0..nd.saturating_sub(1) {
        for j in 0..ne.saturating_sub(1) {
            let v = [
                grid.get(i, j),
                grid.get(i + 1, j),
                grid.get(i + 1, j + 1),
                grid.get(i, j + 1),
            ];
            if v.iter().any(|x| x.is_nan()) {
                continue;
            }
            // edges: 0 bottom, 1 right, 2 top, 3 left
            let edges = [
                EdgeId::AlongDelta(i, j),
                EdgeId::AlongEpsilon(i + 1, j),
                EdgeId::AlongDelta(i, j + 1),
                EdgeId::AlongEpsilon(i, j),
            ];
            let above: Vec<bool> = v.iter().map(|&x| x >= level).collect();
            let case = above
                .iter()
                .enumerate()
                .fold(0u8, |acc, (k, &b)| acc | ((b as u8) << k));
            let pairs: &[(usize, usize)] = match case {
                0 | 15 => &[],
                1 | 14 => &[(3, 0)],
                2 | 13 => &[(0, 1)],
                3 | 12 => &[(3, 1)],
                4 | 11 => &[(1, 2)],
                6 | 9 => &[(0, 2)],
                7 | 8 => &[(3, 2)],
                5 | 10 => {
                    let center_above = (v.iter().sum::<f64>() / 4.0) >= level;
                    // corners 0 and 2 share a state in case 5, corners 1 and 3 in case 10
                    let diag02_above = case == 5;
                    if center_above == diag02_above {
                        &[(3, 2), (0, 1)]
                    } else {
                        &[(3, 0), (1, 2)]
                    }
                }
                _ => unreachable!(),
            };
            for &(a, b) in pairs {
                add(edges[a], edges[b]);
            }
        }
    }

    let point = |e: EdgeId| -> [f64; 2] {
        let (a, b, pa, pb) = match e {
            EdgeId::AlongDelta(i, j) => (
                grid.get(i, j),
                grid.get(i + 1, j),
                [grid.deltas[i], grid.epsilons[j]],
                [grid.deltas[i + 1], grid.epsilons[j]],
            ),
            EdgeId::AlongEpsilon(i, j) => (
                grid.get(i, j),
                grid.get(i, j + 1),
                [grid.deltas[i], grid.epsilons[j]],
                [grid.deltas[i], grid.epsilons[j + 1]],
            ),
        };
        let s = ((level - a) / (b - a)).clamp(0.0, 1.0);
        [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]
    };

    let mut visited: BTreeMap<EdgeId, usize> = BTreeMap::new();
    let mut polylines = Vec::new();
    let starts: Vec<EdgeId> = links
        .iter()
        .filter(|(_, n)| n.len() == 1)
        .map(|(e, _)| *e)
        .chain(links.keys().copied())
        .collect();
    for start in starts {
        if visited.contains_key(&start) {
            continue;
        }
        let mut line = vec![point(start)];
        visited.insert(start, 0);
        let mut prev: Option<EdgeId> = None;
        let mut cur = start;
        loop {
            let next = links[&cur]
                .iter()
                .copied()
                .find(|n| Some(*n) != prev && !visited.contains_key(n));
            match next {
                Some(n) => {
                    line.push(point(n));
                    visited.insert(n, 0);
                    prev = Some(cur);
                    cur = n;
                }
                None => {
                    // close loops
                    if links[&cur].contains(&start) && line.len() > 2 {
                        line.push(line[0]);
                    }
                    break;
                }
            }
        }
        polylines.push(line);
    }
    polylines
}
