//! Progressively modulated spring-mass chains.
//!
//! Site `n` carries mass `m_n(t)` and is joined to site `n + 1` by a spring
//! `k_n(t)`, with `k_n = k0 + dk cos(xi n - nu t)` and likewise for `m_n`; springs may
//! carry an extra phase lag of `spring_offset` sites.
//! States are `[u; p]`. The full chain closes periodically over `N = Z cells`
//! sites; a Bloch cell closes over `Z` sites with `u_Z = Q u_0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::integrators::{HamiltonianRhs, LinearRhs};
use crate::spectral::{CMatrix, RMatrix};
use crate::{Error, Result};

const UNIT_PHASE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    /// Masses per unit cell.
    pub z: usize,
    /// Number of unit cells in the periodic chain.
    pub cells: usize,
    pub k0: f64,
    pub m0: f64,
    pub dk: f64,
    pub dm: f64,
    /// Modulation frequency. Negative values reverse the travel direction;
    /// the reduced-period machinery requires `nu > 0`.
    pub nu: f64,
    /// Spring phase lag in sites: `k_n` is sampled at `n + spring_offset`.
    /// Half a site places each spring at the midpoint of the masses it joins.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub spring_offset: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl Default for ChainSpec {
    fn default() -> Self {
        Self {
            z: 4,
            cells: 30,
            k0: 1.0,
            m0: 1.0,
            dk: 0.0,
            dm: 0.0,
            nu: 0.4,
            spring_offset: 0.0,
        }
    }
}

impl ChainSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.z < 1 {
            return bad(format!("z must be at least 1, got {}", self.z));
        }
        if self.cells < 1 {
            return bad(format!("cells must be at least 1, got {}", self.cells));
        }
        for (name, v) in [
            ("k0", self.k0),
            ("m0", self.m0),
            ("dk", self.dk),
            ("dm", self.dm),
            ("nu", self.nu),
            ("spring_offset", self.spring_offset),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite, got {v}"));
            }
        }
        if self.k0 <= 0.0 || self.m0 <= 0.0 {
            return bad(format!(
                "k0 and m0 must be positive, got k0={}, m0={}",
                self.k0, self.m0
            ));
        }
        if self.dk.abs() >= self.k0 {
            return bad(format!("|dk| must be below k0: dk={}, k0={}", self.dk, self.k0));
        }
        if self.dm.abs() >= self.m0 {
            return bad(format!("|dm| must be below m0: dm={}, m0={}", self.dm, self.m0));
        }
        if self.nu == 0.0 {
            return bad("nu must be nonzero".into());
        }
        Ok(())
    }

    /// Validation plus the forward-travelling requirement of the reduced-period analysis.
    pub fn validate_progressive(&self) -> Result<()> {
        self.validate()?;
        if self.nu < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "reduced-period analysis needs nu > 0 (got {}); mirror the chain instead",
                self.nu
            )));
        }
        Ok(())
    }

    pub fn xi(&self) -> f64 {
        2.0 * PI / self.z as f64
    }

    /// Total number of sites `N`.
    pub fn sites(&self) -> usize {
        self.z * self.cells
    }

    /// Modulation period `T`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.nu.abs()
    }

    /// Reduced period `tau = T / Z`.
    pub fn tau(&self) -> f64 {
        self.period() / self.z as f64
    }

    /// `(k_n(t), m_n(t))` for any integer site index.
    pub fn profiles(&self, n: i64, t: f64) -> (f64, f64) {
        let site = n.rem_euclid(self.z as i64) as f64;
        let mass_phase = (self.xi() * site - self.nu * t).cos();
        let spring_phase = if self.spring_offset == 0.0 {
            mass_phase
        } else {
            (self.xi() * (site + self.spring_offset) - self.nu * t).cos()
        };
        (self.k0 + self.dk * spring_phase, self.m0 + self.dm * mass_phase)
    }

    /// Profiles over one cell; site `n` of any chain uses entry `n mod Z`.
    pub fn cell_profiles(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        (0..self.z as i64).map(|n| self.profiles(n, t)).unzip()
    }

    /// Upper bound `2 sqrt(k_max / m_min)` on the chain's angular frequencies.
    pub fn omega_bound(&self) -> f64 {
        2.0 * ((self.k0 + self.dk.abs()) / (self.m0 - self.dm.abs())).sqrt()
    }

    /// Shorter of the modulation period and the fastest oscillation period.
    pub fn characteristic_time(&self) -> f64 {
        self.period().min(2.0 * PI / self.omega_bound())
    }
}

/// The full periodic chain as a real linear system of dimension `2N`.
#[derive(Debug, Clone, Copy)]
pub struct FullChain {
    pub spec: ChainSpec,
}

impl FullChain {
    pub fn new(spec: ChainSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec })
    }

    fn eval_with(&self, k: &[f64], m: &[f64], x: &[f64], dx: &mut [f64]) {
        let n = self.spec.sites();
        let z = self.spec.z;
        let (u, p) = x.split_at(n);
        let (du, dp) = dx.split_at_mut(n);
        for i in 0..n {
            du[i] = p[i] / m[i % z];
        }
        let mut prev = k[(n - 1) % z] * (u[0] - u[n - 1]);
        for i in 0..n {
            let next = if i + 1 == n { u[0] } else { u[i + 1] };
            let cur = k[i % z] * (next - u[i]);
            dp[i] = cur - prev;
            prev = cur;
        }
    }

    /// Kinetic energy plus half of each adjacent spring's energy, per site.
    pub fn energy_density(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let n = self.spec.sites();
        let z = self.spec.z;
        let (k, m) = self.spec.cell_profiles(t);
        let (u, p) = x.split_at(n);
        let spring: Vec<f64> = (0..n)
            .map(|i| {
                let e = u[(i + 1) % n] - u[i];
                0.5 * k[i % z] * e * e
            })
            .collect();
        (0..n)
            .map(|i| {
                0.5 * p[i] * p[i] / m[i % z] + 0.5 * (spring[i] + spring[(i + n - 1) % n])
            })
            .collect()
    }

    /// Total energy `sum p^2 / 2m + sum k e^2 / 2`.
    pub fn energy(&self, t: f64, x: &[f64]) -> f64 {
        self.energy_density(t, x).iter().sum()
    }

    /// Assembled `K(t)`; for tests and diagnostics only.
    pub fn stiffness_matrix(&self, t: f64) -> RMatrix {
        let n = self.spec.sites();
        let mut kmat = RMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut out = vec![0.0; n];
        for c in 0..n {
            e.fill(0.0);
            e[c] = 1.0;
            self.apply_stiffness(t, &e, &mut out);
            kmat.set_column(c, &nalgebra::DVector::from_column_slice(&out));
        }
        kmat
    }
}

impl LinearRhs<f64> for FullChain {
    fn dim(&self) -> usize {
        2 * self.spec.sites()
    }

    fn eval(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        let (k, m) = self.spec.cell_profiles(t);
        self.eval_with(&k, &m, x, dx);
    }

    fn eval_columns(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        let (k, m) = self.spec.cell_profiles(t);
        let d = self.dim();
        for (xc, dc) in x.chunks_exact(d).zip(dx.chunks_exact_mut(d)) {
            self.eval_with(&k, &m, xc, dc);
        }
    }

    fn characteristic_time(&self) -> f64 {
        self.spec.characteristic_time()
    }
}

impl HamiltonianRhs<f64> for FullChain {
    fn half_dim(&self) -> usize {
        self.spec.sites()
    }

    fn apply_mass_inv(&self, t: f64, p: &[f64], out: &mut [f64]) {
        let z = self.spec.z;
        let (_, m) = self.spec.cell_profiles(t);
        for (i, (o, pi)) in out.iter_mut().zip(p).enumerate() {
            *o = pi / m[i % z];
        }
    }

    fn apply_stiffness(&self, t: f64, u: &[f64], out: &mut [f64]) {
        let n = self.spec.sites();
        let z = self.spec.z;
        let (k, _) = self.spec.cell_profiles(t);
        let mut prev = k[(n - 1) % z] * (u[0] - u[n - 1]);
        for i in 0..n {
            let cur = k[i % z] * (u[(i + 1) % n] - u[i]);
            out[i] = prev - cur;
            prev = cur;
        }
    }
}

/// One unit cell of `Z` sites with Bloch closure `u_Z = Q u_0`.
#[derive(Debug, Clone, Copy)]
pub struct BlochCell {
    pub spec: ChainSpec,
    pub q_factor: Complex64,
}

impl BlochCell {
    pub fn new(spec: ChainSpec, q_factor: Complex64) -> Result<Self> {
        spec.validate()?;
        if (q_factor.norm() - 1.0).abs() > UNIT_PHASE_TOL {
            return Err(Error::InvalidParameter(format!(
                "Bloch factor must have unit modulus, got |Q| = {}",
                q_factor.norm()
            )));
        }
        Ok(Self { spec, q_factor })
    }

    /// `out = K u` with `K = A^H C A` and the strain `e_{Z-1} = Q u_0 - u_{Z-1}`.
    fn stiffness_with(&self, k: &[f64], u: &[Complex64], out: &mut [Complex64]) {
        let z = self.spec.z;
        let q = self.q_factor;
        let strain = |i: usize| -> Complex64 {
            if i + 1 == z {
                q * u[0] - u[i]
            } else {
                u[i + 1] - u[i]
            }
        };
        let mut prev = q.conj() * strain(z - 1) * k[z - 1];
        for i in 0..z {
            let cur = strain(i) * k[i];
            out[i] = prev - cur;
            prev = cur;
        }
    }

    fn eval_with(&self, k: &[f64], m: &[f64], x: &[Complex64], dx: &mut [Complex64]) {
        let z = self.spec.z;
        let (u, p) = x.split_at(z);
        let (du, dp) = dx.split_at_mut(z);
        for i in 0..z {
            du[i] = p[i] / m[i];
        }
        self.stiffness_with(k, u, dp);
        for v in dp.iter_mut() {
            *v = -*v;
        }
    }

    /// Assembled Hermitian `K(t)`; for tests and diagnostics only.
    pub fn stiffness_matrix(&self, t: f64) -> CMatrix {
        let z = self.spec.z;
        let (k, _) = self.spec.cell_profiles(t);
        let mut kmat = CMatrix::zeros(z, z);
        let mut e = vec![Complex64::new(0.0, 0.0); z];
        let mut out = vec![Complex64::new(0.0, 0.0); z];
        for c in 0..z {
            e.fill(Complex64::new(0.0, 0.0));
            e[c] = Complex64::new(1.0, 0.0);
            self.stiffness_with(&k, &e, &mut out);
            kmat.set_column(c, &nalgebra::DVector::from_column_slice(&out));
        }
        kmat
    }
}

impl LinearRhs<Complex64> for BlochCell {
    fn dim(&self) -> usize {
        2 * self.spec.z
    }

    fn eval(&self, t: f64, x: &[Complex64], dx: &mut [Complex64]) {
        let (k, m) = self.spec.cell_profiles(t);
        self.eval_with(&k, &m, x, dx);
    }

    fn eval_columns(&self, t: f64, x: &[Complex64], dx: &mut [Complex64]) {
        let (k, m) = self.spec.cell_profiles(t);
        let d = self.dim();
        for (xc, dc) in x.chunks_exact(d).zip(dx.chunks_exact_mut(d)) {
            self.eval_with(&k, &m, xc, dc);
        }
    }

    fn characteristic_time(&self) -> f64 {
        self.spec.characteristic_time()
    }
}

impl HamiltonianRhs<Complex64> for BlochCell {
    fn half_dim(&self) -> usize {
        self.spec.z
    }

    fn apply_mass_inv(&self, t: f64, p: &[Complex64], out: &mut [Complex64]) {
        let (_, m) = self.spec.cell_profiles(t);
        for ((o, pi), mi) in out.iter_mut().zip(p).zip(&m) {
            *o = pi / mi;
        }
    }

    fn apply_stiffness(&self, t: f64, u: &[Complex64], out: &mut [Complex64]) {
        let (k, _) = self.spec.cell_profiles(t);
        self.stiffness_with(&k, u, out);
    }
}

/// Site shift `(S x)_n = x_{n-1}`, with the wrapped entry scaled by `Q*`,
/// acting identically on the displacement and momentum blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftOperator {
    /// Sites per block (`N` for the full chain, `Z` for a cell).
    pub sites: usize,
    /// Bloch factor `Q`; one for the full chain.
    pub bloch_phase: Complex64,
}

impl ShiftOperator {
    pub fn full(spec: &ChainSpec) -> Self {
        Self {
            sites: spec.sites(),
            bloch_phase: Complex64::new(1.0, 0.0),
        }
    }

    pub fn cell(spec: &ChainSpec, q_factor: Complex64) -> Self {
        Self {
            sites: spec.z,
            bloch_phase: q_factor,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.sites
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    fn is_real(&self) -> bool {
        self.bloch_phase == Complex64::new(1.0, 0.0)
    }

    /// Source row of output row `r` under `S`, with its phase.
    fn source(&self, r: usize, adjoint: bool) -> (usize, Complex64) {
        let n = self.sites;
        let (block, i) = (r / n * n, r % n);
        let one = Complex64::new(1.0, 0.0);
        if adjoint {
            if i + 1 == n {
                (block, self.bloch_phase)
            } else {
                (block + i + 1, one)
            }
        } else if i == 0 {
            (block + n - 1, self.bloch_phase.conj())
        } else {
            (block + i - 1, one)
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(x.len())?;
        Ok((0..x.len())
            .map(|r| {
                let (s, ph) = self.source(r, false);
                x[s] * ph
            })
            .collect())
    }

    pub fn apply_adjoint(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(x.len())?;
        Ok((0..x.len())
            .map(|r| {
                let (s, ph) = self.source(r, true);
                x[s] * ph
            })
            .collect())
    }

    /// `S A` (or `S^H A`) as a row permutation with phases.
    pub fn apply_to_matrix(&self, a: &CMatrix, adjoint: bool) -> Result<CMatrix> {
        self.check(a.nrows())?;
        Ok(CMatrix::from_fn(a.nrows(), a.ncols(), |r, c| {
            let (s, ph) = self.source(r, adjoint);
            a[(s, c)] * ph
        }))
    }

    /// Real variant for the full chain, where `Q = 1`.
    pub fn apply_to_real_matrix(&self, a: &RMatrix, adjoint: bool) -> Result<RMatrix> {
        self.check(a.nrows())?;
        if !self.is_real() {
            return Err(Error::InvalidParameter(
                "real shift requires a unit Bloch factor".into(),
            ));
        }
        Ok(RMatrix::from_fn(a.nrows(), a.ncols(), |r, c| {
            a[(self.source(r, adjoint).0, c)]
        }))
    }

    /// Dense `2n x 2n` matrix of `S`.
    pub fn to_matrix(&self) -> CMatrix {
        let d = self.dim();
        let mut s = CMatrix::zeros(d, d);
        for r in 0..d {
            let (c, ph) = self.source(r, false);
            s[(r, c)] = ph;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(z: usize, cells: usize) -> ChainSpec {
        ChainSpec {
            z,
            cells,
            k0: 1.3,
            m0: 0.9,
            dk: 0.4,
            dm: 0.2,
            nu: 0.7,
            spring_offset: 0.0,
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn validation() {
        assert!(spec(4, 3).validate().is_ok());
        assert!(ChainSpec { z: 0, ..spec(4, 3) }.validate().is_err());
        assert!(ChainSpec { cells: 0, ..spec(4, 3) }.validate().is_err());
        assert!(ChainSpec { dk: 1.3, ..spec(4, 3) }.validate().is_err());
        assert!(ChainSpec { dm: -0.95, ..spec(4, 3) }.validate().is_err());
        assert!(ChainSpec { nu: 0.0, ..spec(4, 3) }.validate().is_err());
        assert!(ChainSpec { nu: -0.5, ..spec(4, 3) }.validate().is_ok());
        assert!(ChainSpec { nu: -0.5, ..spec(4, 3) }.validate_progressive().is_err());
    }

    #[test]
    fn derived_quantities() {
        let s = spec(4, 3);
        assert_eq!(s.sites(), 12);
        assert!((s.xi() - PI / 2.0).abs() < 1e-15);
        assert!((s.period() - 2.0 * PI / 0.7).abs() < 1e-15);
        assert!((s.tau() * 4.0 - s.period()).abs() < 1e-14);
    }

    #[test]
    fn profile_examples() {
        let s = spec(5, 2);
        let (k, m) = s.profiles(0, 0.0);
        assert!((k - 1.7).abs() < 1e-15 && (m - 1.1).abs() < 1e-15);
        let flat = ChainSpec { dk: 0.0, dm: 0.0, ..s };
        assert_eq!(flat.profiles(3, 2.1), (1.3, 0.9));
        for n in 0..10 {
            for &t in &[0.0, 0.37, 5.2] {
                let a = s.profiles(n, t + s.tau());
                let b = s.profiles(n - 1, t);
                assert!((a.0 - b.0).abs() < 1e-14 && (a.1 - b.1).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn two_site_hand_computation() {
        let s = ChainSpec {
            z: 2,
            cells: 1,
            k0: 2.0,
            dk: 0.0,
            dm: 0.0,
            ..spec(2, 1)
        };
        let chain = FullChain::new(s).unwrap();
        let mut dx = vec![0.0; 4];
        chain.eval(0.3, &[1.0, 0.0, 0.0, 0.0], &mut dx);
        assert_eq!(dx, vec![0.0, 0.0, -4.0, 4.0]);
    }

    #[test]
    fn zero_and_translation_give_no_force() {
        let chain = FullChain::new(spec(3, 2)).unwrap();
        let mut dx = vec![1.0; 12];
        chain.eval(0.4, &[0.0; 12], &mut dx);
        assert!(dx.iter().all(|&v| v == 0.0));
        let mut x = vec![0.0; 12];
        x[..6].fill(1.0);
        chain.eval(0.4, &x, &mut dx);
        assert!(dx.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn cell_with_unit_phase_matches_full_chain() {
        let s = spec(4, 1);
        let full = FullChain::new(s).unwrap();
        let cell = BlochCell::new(s, c(1.0, 0.0)).unwrap();
        let x: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).sin()).collect();
        let xc: Vec<Complex64> = x.iter().map(|&v| c(v, 0.0)).collect();
        let mut dx = vec![0.0; 8];
        let mut dxc = vec![c(0.0, 0.0); 8];
        full.eval(1.1, &x, &mut dx);
        cell.eval(1.1, &xc, &mut dxc);
        for (a, b) in dx.iter().zip(&dxc) {
            assert!((a - b.re).abs() < 1e-14 && b.im.abs() < 1e-14);
        }
    }

    #[test]
    fn cell_stiffness_is_hermitian_psd() {
        let q = Complex64::from_polar(1.0, 0.9);
        for z in 1..5 {
            let cell = BlochCell::new(spec(z, 3), q).unwrap();
            let k = cell.stiffness_matrix(0.77);
            assert!((&k - k.adjoint()).norm() < 1e-14);
            let eig = crate::spectral::eig(&k).unwrap();
            assert!(eig.values.iter().all(|v| v.re > -1e-12 && v.im.abs() < 1e-12));
        }
    }

    #[test]
    fn cell_rejects_non_unit_phase() {
        assert!(BlochCell::new(spec(2, 2), c(1.1, 0.0)).is_err());
    }

    #[test]
    fn shift_round_trip_and_powers() {
        let s = spec(3, 2);
        let op = ShiftOperator::full(&s);
        let x: Vec<Complex64> = (0..12).map(|i| c(i as f64, 0.0)).collect();
        assert_eq!(op.apply_adjoint(&op.apply(&x).unwrap()).unwrap(), x);
        let mut y = x.clone();
        for _ in 0..3 {
            y = op.apply(&y).unwrap();
        }
        // one-cell shift: u_n <- u_{n-3}
        assert_eq!(y[3], x[0]);
        assert_eq!(y[6 + 5], x[6 + 2]);
        for _ in 0..3 {
            y = op.apply(&y).unwrap();
        }
        assert_eq!(y, x);
    }

    #[test]
    fn cell_shift_matches_dense_matrix() {
        let q = c(0.0, 1.0);
        let op = ShiftOperator::cell(&spec(2, 4), q);
        let s = op.to_matrix();
        // corner entry of each block is Q*
        assert_eq!(s[(0, 1)], q.conj());
        assert_eq!(s[(1, 0)], c(1.0, 0.0));
        assert_eq!(s[(2, 3)], q.conj());
        let x = vec![c(1.0, 2.0), c(-0.5, 0.3), c(0.2, 0.0), c(0.0, 1.0)];
        let dense = &s * nalgebra::DVector::from_column_slice(&x);
        let fast = op.apply(&x).unwrap();
        for (a, b) in dense.iter().zip(&fast) {
            assert!((a - b).norm() < 1e-15);
        }
        assert!((&s * s.adjoint() - CMatrix::identity(4, 4)).norm() < 1e-15);
    }

    #[test]
    fn shift_dimension_mismatch() {
        let op = ShiftOperator::full(&spec(2, 2));
        assert!(op.apply(&[c(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let s = spec(4, 3);
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<ChainSpec>(&text).unwrap(), s);
        assert!(serde_json::from_str::<ChainSpec>(r#"{"z":1}"#).is_err());
    }
}
