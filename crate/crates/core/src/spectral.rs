//! Dense linear-algebra kernels shared by the analysis modules.
//!
//! Real matrices are [`RMatrix`], complex ones [`CMatrix`]; both are plain
//! column-major `nalgebra` matrices. Eigendecomposition goes through a complex
//! Schur form followed by triangular back-substitution, and returns eigenpairs
//! in a deterministic order (real part, then imaginary part).

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::{Error, Result};

pub type RMatrix = DMatrix<f64>;
pub type CMatrix = DMatrix<Complex64>;

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITERS: usize = 0; // 0 = until convergence

/// Eigenvalues with their unit-norm eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<Complex64>,
    pub vectors: CMatrix,
}

impl Eigen {
    /// Largest relative residual `|A v - lambda v| / |A|` over all pairs.
    pub fn max_residual(&self, a: &CMatrix) -> f64 {
        let scale = a.norm().max(f64::MIN_POSITIVE);
        self.values
            .iter()
            .enumerate()
            .map(|(k, &lambda)| {
                let v = self.vectors.column(k);
                (a * v - v * lambda).norm() / scale
            })
            .fold(0.0, f64::max)
    }
}

/// Canonical symplectic form `J = [[0, I], [-I, 0]]` of half dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticForm {
    pub half_dim: usize,
}

impl SymplecticForm {
    pub fn new(half_dim: usize) -> Self {
        Self { half_dim }
    }

    pub fn dim(&self) -> usize {
        2 * self.half_dim
    }

    pub fn matrix(&self) -> RMatrix {
        let n = self.half_dim;
        let mut j = RMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            j[(i, n + i)] = 1.0;
            j[(n + i, i)] = -1.0;
        }
        j
    }

    /// `J x` without forming `J`.
    fn apply(&self, x: &CMatrix) -> CMatrix {
        let n = self.half_dim;
        let mut out = CMatrix::zeros(x.nrows(), x.ncols());
        for c in 0..x.ncols() {
            for i in 0..n {
                out[(i, c)] = x[(n + i, c)];
                out[(n + i, c)] = -x[(i, c)];
            }
        }
        out
    }
}

pub fn to_complex(a: &RMatrix) -> CMatrix {
    a.map(|x| Complex64::new(x, 0.0))
}

pub fn ensure_square<T: nalgebra::Scalar>(a: &DMatrix<T>) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

fn ensure_finite(a: &CMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Eigendecomposition of a general complex square matrix.
pub fn eig(a: &CMatrix) -> Result<Eigen> {
    let n = ensure_square(a)?;
    ensure_finite(a)?;
    if n == 0 {
        return Ok(Eigen {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let norm = a.norm();
    let schur = Schur::try_new(a.clone(), SCHUR_EPS, SCHUR_MAX_ITERS)
        .ok_or(Error::EigenNoConvergence { dim: n, norm })?;
    let (q, t) = schur.unpack();

    let mut values = Vec::with_capacity(n);
    let mut vectors = CMatrix::zeros(n, n);
    let tiny = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
    for k in 0..n {
        let lambda = t[(k, k)];
        let x = triangular_eigenvector(&t, k, tiny);
        let mut v = &q * x;
        normalize_phase(&mut v);
        if !v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::EigenNoConvergence { dim: n, norm });
        }
        values.push(lambda);
        vectors.set_column(k, &v);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        values[i]
            .re
            .total_cmp(&values[j].re)
            .then(values[i].im.total_cmp(&values[j].im))
    });
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = CMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    Ok(Eigen {
        values: sorted_values,
        vectors: sorted_vectors,
    })
}

pub fn eig_real(a: &RMatrix) -> Result<Eigen> {
    eig(&to_complex(a))
}

/// Eigenvalues only.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    eig(a).map(|e| e.values)
}

/// Solves `(T - T_kk) x = 0` with `x_k = 1` and `x_i = 0` for `i > k`.
/// Near-zero pivots are replaced by `tiny` as in LAPACK's `ztrevc`.
fn triangular_eigenvector(t: &CMatrix, k: usize, tiny: f64) -> nalgebra::DVector<Complex64> {
    let n = t.nrows();
    let lambda = t[(k, k)];
    let mut x = nalgebra::DVector::<Complex64>::zeros(n);
    x[k] = Complex64::new(1.0, 0.0);
    for i in (0..k).rev() {
        let mut rhs = Complex64::new(0.0, 0.0);
        for j in (i + 1)..=k {
            rhs -= t[(i, j)] * x[j];
        }
        let mut pivot = t[(i, i)] - lambda;
        if pivot.norm() < tiny {
            pivot = Complex64::new(tiny, 0.0);
        }
        x[i] = rhs / pivot;
        let big = x.camax();
        if big > 1e100 {
            x /= Complex64::new(big, 0.0);
        }
    }
    x
}

/// Unit 2-norm with the largest-modulus component made real and positive.
fn normalize_phase(v: &mut nalgebra::DVector<Complex64>) {
    let norm = v.norm();
    if norm == 0.0 {
        return;
    }
    let mut pivot = v[0];
    let mut best = -1.0;
    for z in v.iter() {
        // strict comparison with a small margin keeps the choice stable under roundoff
        if z.norm() > best * (1.0 + 1e-9) {
            best = z.norm();
            pivot = *z;
        }
    }
    let phase = pivot / pivot.norm();
    *v /= phase * norm;
}

/// Frobenius norm of `m^H J m - J`; zero iff `m` is (conjugate-)symplectic.
pub fn symplectic_deviation(m: &CMatrix, j: SymplecticForm) -> Result<f64> {
    let n = ensure_square(m)?;
    if n != j.dim() {
        return Err(Error::DimensionMismatch {
            expected: j.dim(),
            got: n,
        });
    }
    let jm = j.apply(m);
    let mut form = m.adjoint() * jm;
    let h = j.half_dim;
    for i in 0..h {
        form[(i, h + i)] -= 1.0;
        form[(h + i, i)] += 1.0;
    }
    Ok(form.norm())
}

pub fn symplectic_deviation_real(m: &RMatrix, j: SymplecticForm) -> Result<f64> {
    symplectic_deviation(&to_complex(m), j)
}

/// Determinant through partially pivoted LU.
pub fn det(a: &CMatrix) -> Result<Complex64> {
    ensure_square(a)?;
    Ok(a.clone().lu().determinant())
}

pub fn det_real(a: &RMatrix) -> Result<f64> {
    ensure_square(a)?;
    Ok(a.clone().lu().determinant())
}

/// `a^p` by repeated squaring.
pub fn mat_pow<T>(a: &DMatrix<T>, mut p: usize) -> DMatrix<T>
where
    T: nalgebra::ComplexField,
{
    let n = a.nrows();
    let mut result = DMatrix::<T>::identity(n, n);
    let mut base = a.clone();
    while p > 0 {
        if p & 1 == 1 {
            result = &result * &base;
        }
        p >>= 1;
        if p > 0 {
            base = &base * &base;
        }
    }
    result
}
