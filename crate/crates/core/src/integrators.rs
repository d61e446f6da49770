//! Fixed-step integrators for linear non-autonomous systems `x' = A(t) x`.
//!
//! States are flat slices holding one or more stacked columns of length
//! [`LinearRhs::dim`]; a fundamental matrix is integrated by passing the
//! column-major identity. Implicit Runge-Kutta stages are solved by plain
//! fixed-point iteration, which only needs matrix-free products `A(t) x`.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::{Error, Result};

/// Field of state entries: `f64` for full chains, `Complex64` for Bloch cells.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    const ZERO: Self;
    const ONE: Self;
    fn norm_sqr(self) -> f64;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn norm_sqr(self) -> f64 {
        self * self
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    const ONE: Self = Complex64::new(1.0, 0.0);
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
}

pub(crate) fn norm<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Right-hand side of a linear system, evaluated without assembling `A(t)`.
pub trait LinearRhs<T: Scalar>: Sync {
    /// Length of one state column.
    fn dim(&self) -> usize;

    /// `dx = A(t) x` for a single column.
    fn eval(&self, t: f64, x: &[T], dx: &mut [T]);

    /// `dx = A(t) x` for `x.len() / dim` stacked columns.
    fn eval_columns(&self, t: f64, x: &[T], dx: &mut [T]) {
        let d = self.dim();
        for (xc, dc) in x.chunks_exact(d).zip(dx.chunks_exact_mut(d)) {
            self.eval(t, xc, dc);
        }
    }

    /// Shortest time scale of the dynamics; sets the step size.
    fn characteristic_time(&self) -> f64 {
        f64::INFINITY
    }
}

/// Systems of the form `u' = M(t)^-1 p`, `p' = -K(t) u`.
pub trait HamiltonianRhs<T: Scalar>: Sync {
    fn half_dim(&self) -> usize;
    fn apply_mass_inv(&self, t: f64, p: &[T], out: &mut [T]);
    fn apply_stiffness(&self, t: f64, u: &[T], out: &mut [T]);
}

#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    stages: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl ButcherTableau {
    /// Builds a tableau from row-major `a`, checking `sum b = 1` and `c_i = sum_j a_ij`.
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let s = b.len();
        if s == 0 || c.len() != s || a.len() != s * s {
            return Err(Error::InvalidParameter(format!(
                "inconsistent Butcher tableau sizes: a {}, b {}, c {}",
                a.len(),
                b.len(),
                c.len()
            )));
        }
        let tab = Self { stages: s, a, b, c };
        let (sum_err, row_err) = tab.consistency_errors();
        if sum_err > 1e-14 || row_err > 1e-14 {
            return Err(Error::InvalidParameter(format!(
                "Butcher tableau inconsistent: |sum b - 1| = {sum_err:e}, max |c - rowsum a| = {row_err:e}"
            )));
        }
        Ok(tab)
    }

    /// Sixth-order, three-stage Gauss-Legendre collocation method.
    pub fn gauss_legendre6() -> Self {
        let r = 15f64.sqrt();
        let a = vec![
            5.0 / 36.0,
            2.0 / 9.0 - r / 15.0,
            5.0 / 36.0 - r / 30.0,
            5.0 / 36.0 + r / 24.0,
            2.0 / 9.0,
            5.0 / 36.0 - r / 24.0,
            5.0 / 36.0 + r / 30.0,
            2.0 / 9.0 + r / 15.0,
            5.0 / 36.0,
        ];
        let b = vec![5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0];
        let c = vec![0.5 - r / 10.0, 0.5, 0.5 + r / 10.0];
        Self { stages: 3, a, b, c }
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.stages + j]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// `(|sum b - 1|, max_i |c_i - sum_j a_ij|)`.
    pub fn consistency_errors(&self) -> (f64, f64) {
        let s = self.stages;
        let sum_err = (self.b.iter().sum::<f64>() - 1.0).abs();
        let row_err = (0..s)
            .map(|i| (self.c[i] - (0..s).map(|j| self.a(i, j)).sum::<f64>()).abs())
            .fold(0.0, f64::max);
        (sum_err, row_err)
    }
}

/// Step-size and stage-solver settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepConfig {
    /// Steps per characteristic time of the system.
    pub steps_per_char_time: usize,
    pub fixed_point_max_iters: usize,
    /// Stage increments must fall below `tol * |x|`.
    pub fixed_point_tol: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            steps_per_char_time: 40,
            fixed_point_max_iters: 10,
            fixed_point_tol: 1e-12,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_char_time == 0
            || self.fixed_point_max_iters == 0
            || !(self.fixed_point_tol > 0.0)
        {
            return Err(Error::InvalidParameter(format!(
                "step configuration must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    /// Number of uniform steps covering `span` for a system of characteristic time `char_time`.
    pub fn step_count(&self, span: f64, char_time: f64) -> usize {
        if !char_time.is_finite() || char_time <= 0.0 {
            return self.steps_per_char_time.max(1);
        }
        let n = (span.abs() * self.steps_per_char_time as f64 / char_time).ceil();
        (n as usize).max(1)
    }
}

/// Reusable workspace for implicit Runge-Kutta steps on a fixed state size.
pub struct IrkStepper<'a, T: Scalar> {
    tab: &'a ButcherTableau,
    cfg: StepConfig,
    stages: Vec<Vec<T>>,
    fresh: Vec<Vec<T>>,
    probe: Vec<T>,
}

impl<'a, T: Scalar> IrkStepper<'a, T> {
    pub fn new(tab: &'a ButcherTableau, cfg: StepConfig, len: usize) -> Self {
        let s = tab.stages();
        Self {
            tab,
            cfg,
            stages: vec![vec![T::ZERO; len]; s],
            fresh: vec![vec![T::ZERO; len]; s],
            probe: vec![T::ZERO; len],
        }
    }

    /// Advances `x` from `t` to `t + h` in place.
    pub fn step<R: LinearRhs<T> + ?Sized>(
        &mut self,
        sys: &R,
        t: f64,
        h: f64,
        x: &mut [T],
    ) -> Result<()> {
        let s = self.tab.stages();
        for i in 0..s {
            sys.eval_columns(t + self.tab.c[i] * h, x, &mut self.stages[i]);
        }
        let target = self.cfg.fixed_point_tol * norm(x);
        let mut residual = f64::INFINITY;
        for _ in 0..self.cfg.fixed_point_max_iters {
            residual = 0.0;
            for i in 0..s {
                self.probe.copy_from_slice(x);
                for j in 0..s {
                    let w = h * self.tab.a(i, j);
                    if w != 0.0 {
                        for (p, k) in self.probe.iter_mut().zip(&self.stages[j]) {
                            *p += *k * w;
                        }
                    }
                }
                sys.eval_columns(t + self.tab.c[i] * h, &self.probe, &mut self.fresh[i]);
                let diff: f64 = self.fresh[i]
                    .iter()
                    .zip(&self.stages[i])
                    .map(|(a, b)| (*a - *b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                residual = residual.max(h.abs() * diff);
            }
            std::mem::swap(&mut self.stages, &mut self.fresh);
            if residual <= target {
                break;
            }
        }
        if !(residual <= target) {
            return Err(Error::FixedPointNoConvergence {
                t,
                residual: residual / norm(x).max(f64::MIN_POSITIVE),
                iters: self.cfg.fixed_point_max_iters,
            });
        }
        for i in 0..s {
            let w = h * self.tab.b[i];
            for (xv, k) in x.iter_mut().zip(&self.stages[i]) {
                *xv += *k * w;
            }
        }
        Ok(())
    }
}

fn check_len<T: Scalar, R: LinearRhs<T> + ?Sized>(sys: &R, x: &[T]) -> Result<()> {
    let d = sys.dim();
    if d == 0 || !x.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    Ok(())
}

/// Implicit Runge-Kutta from `t0` to `t1` with the step count implied by
/// `cfg` and the system's characteristic time.
pub fn irk_integrate<T: Scalar, R: LinearRhs<T> + ?Sized>(
    sys: &R,
    x0: &[T],
    t0: f64,
    t1: f64,
    tab: &ButcherTableau,
    cfg: &StepConfig,
) -> Result<Vec<T>> {
    let steps = cfg.step_count(t1 - t0, sys.characteristic_time());
    irk_integrate_steps(sys, x0, t0, t1, steps, tab, cfg)
}

/// Implicit Runge-Kutta with an explicit number of uniform steps.
pub fn irk_integrate_steps<T: Scalar, R: LinearRhs<T> + ?Sized>(
    sys: &R,
    x0: &[T],
    t0: f64,
    t1: f64,
    steps: usize,
    tab: &ButcherTableau,
    cfg: &StepConfig,
) -> Result<Vec<T>> {
    cfg.validate()?;
    check_len(sys, x0)?;
    if !(t1 > t0) {
        return Err(Error::InvalidParameter(format!(
            "integration interval must be increasing: [{t0}, {t1}]"
        )));
    }
    let steps = steps.max(1);
    let h = (t1 - t0) / steps as f64;
    let mut x = x0.to_vec();
    let mut stepper = IrkStepper::new(tab, *cfg, x.len());
    for k in 0..steps {
        stepper.step(sys, t0 + k as f64 * h, h, &mut x)?;
    }
    Ok(x)
}

/// Classical explicit fourth-order Runge-Kutta; used as an independent reference.
pub fn rk4_reference_integrate<T: Scalar, R: LinearRhs<T> + ?Sized>(
    sys: &R,
    x0: &[T],
    t0: f64,
    t1: f64,
    steps: usize,
) -> Vec<T> {
    let steps = steps.max(1);
    let h = (t1 - t0) / steps as f64;
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) =
        (vec![T::ZERO; n], vec![T::ZERO; n], vec![T::ZERO; n], vec![T::ZERO; n]);
    let mut tmp = vec![T::ZERO; n];
    for step in 0..steps {
        let t = t0 + step as f64 * h;
        sys.eval_columns(t, &x, &mut k1);
        for i in 0..n {
            tmp[i] = x[i] + k1[i] * (0.5 * h);
        }
        sys.eval_columns(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = x[i] + k2[i] * (0.5 * h);
        }
        sys.eval_columns(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = x[i] + k3[i] * h;
        }
        sys.eval_columns(t + h, &tmp, &mut k4);
        for i in 0..n {
            x[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    x
}

/// One symplectic Euler step on a single `[u; p]` column:
/// `u' = u + h M^-1(t+h) p`, then `p' = p - h K(t+h) u'`.
pub fn symplectic_euler_step<T: Scalar, H: HamiltonianRhs<T> + ?Sized>(
    sys: &H,
    x: &mut [T],
    t: f64,
    h: f64,
) -> Result<()> {
    let n = sys.half_dim();
    if x.len() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            got: x.len(),
        });
    }
    let mut work = vec![T::ZERO; n];
    let (u, p) = x.split_at_mut(n);
    sys.apply_mass_inv(t + h, p, &mut work);
    for (ui, wi) in u.iter_mut().zip(&work) {
        *ui += *wi * h;
    }
    sys.apply_stiffness(t + h, u, &mut work);
    for (pi, wi) in p.iter_mut().zip(&work) {
        *pi += -(*wi * h);
    }
    Ok(())
}

/// Symplectic Euler over `[t0, t1]` in `steps` uniform steps, column by column.
pub fn symplectic_euler_integrate<T: Scalar, H: HamiltonianRhs<T> + ?Sized>(
    sys: &H,
    x0: &[T],
    t0: f64,
    t1: f64,
    steps: usize,
) -> Result<Vec<T>> {
    let d = 2 * sys.half_dim();
    if d == 0 || !x0.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x0.len(),
        });
    }
    let steps = steps.max(1);
    let h = (t1 - t0) / steps as f64;
    let mut x = x0.to_vec();
    for col in x.chunks_exact_mut(d) {
        for k in 0..steps {
            symplectic_euler_step(sys, col, t0 + k as f64 * h, h)?;
        }
    }
    Ok(x)
}

/// Column-major identity of size `n`, as a flat matrix-valued initial condition.
pub fn identity_state<T: Scalar>(n: usize) -> Vec<T> {
    let mut x = vec![T::ZERO; n * n];
    for i in 0..n {
        x[i * n + i] = T::ONE;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Frozen;
    impl LinearRhs<f64> for Frozen {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, _t: f64, _x: &[f64], dx: &mut [f64]) {
            dx.fill(0.0);
        }
    }

    struct Oscillator;
    impl HamiltonianRhs<f64> for Oscillator {
        fn half_dim(&self) -> usize {
            1
        }
        fn apply_mass_inv(&self, _t: f64, p: &[f64], out: &mut [f64]) {
            out.copy_from_slice(p);
        }
        fn apply_stiffness(&self, _t: f64, u: &[f64], out: &mut [f64]) {
            out.copy_from_slice(u);
        }
    }

    #[test]
    fn gl6_tableau_is_consistent() {
        let tab = ButcherTableau::gauss_legendre6();
        let (sum_err, row_err) = tab.consistency_errors();
        assert!(sum_err <= 1e-14 && row_err <= 1e-14, "{sum_err} {row_err}");
        assert!(ButcherTableau::new(tab.a.clone(), tab.b.clone(), tab.c.clone()).is_ok());
    }

    #[test]
    fn inconsistent_tableau_rejected() {
        let err = ButcherTableau::new(vec![0.5], vec![0.9], vec![0.5]);
        assert!(err.is_err());
        let err = ButcherTableau::new(vec![0.5], vec![1.0], vec![0.4]);
        assert!(err.is_err());
    }

    #[test]
    fn zero_rhs_leaves_state_unchanged() {
        let x0 = [0.3, -1.2, 4.0, 5.5];
        let tab = ButcherTableau::gauss_legendre6();
        let x = irk_integrate(&Frozen, &x0, 0.0, 17.0, &tab, &StepConfig::default()).unwrap();
        assert_eq!(x, x0);
        let x = rk4_reference_integrate(&Frozen, &x0, 0.0, 17.0, 13);
        assert_eq!(x, x0);
    }

    #[test]
    fn symplectic_euler_hand_values() {
        let mut x = [1.0, 0.0];
        symplectic_euler_step(&Oscillator, &mut x, 0.0, 0.0).unwrap();
        assert_eq!(x, [1.0, 0.0]);
        let mut x = [1.0, 0.0];
        symplectic_euler_step(&Oscillator, &mut x, 0.0, 0.1).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn symplectic_euler_rejects_odd_state() {
        let mut x = [1.0, 0.0, 2.0];
        assert!(matches!(
            symplectic_euler_step(&Oscillator, &mut x, 0.0, 0.1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn non_convergent_stage_solve_reports_residual() {
        struct Stiff;
        impl LinearRhs<f64> for Stiff {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, _t: f64, x: &[f64], dx: &mut [f64]) {
                dx[0] = -50.0 * x[0];
            }
        }
        let tab = ButcherTableau::gauss_legendre6();
        let err = irk_integrate_steps(&Stiff, &[1.0], 0.0, 1.0, 1, &tab, &StepConfig::default());
        assert!(matches!(err, Err(Error::FixedPointNoConvergence { .. })));
    }

    #[test]
    fn step_count_rounds_up() {
        let cfg = StepConfig::default();
        assert_eq!(cfg.step_count(1.0, 1.0), 40);
        assert_eq!(cfg.step_count(1.01, 1.0), 41);
        assert_eq!(cfg.step_count(1.0, f64::INFINITY), 40);
    }
}
