//! Fundamental and monodromy matrices of modulated chains.
//!
//! Progressive modulation gives `A(t + tau) = S A(t) S^T`, so the full
//! monodromy factors as `M = S^Z (S^T m)^Z` with `m = Phi(tau)`. The same
//! relation on a Bloch cell yields the shifted reduced monodromy `S^H m`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::chain::{BlochCell, ChainSpec, FullChain, ShiftOperator};
use crate::integrators::{identity_state, irk_integrate, ButcherTableau, StepConfig};
use crate::spectral::{
    det, eigenvalues, mat_pow, symplectic_deviation, to_complex, CMatrix, RMatrix,
    SymplecticForm,
};
use crate::{Error, Result};

/// Default distance from the unit circle above which a multiplier counts as growing.
pub const UNIT_CIRCLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct MonodromyResult {
    pub matrix: CMatrix,
    /// Time span integrated (or represented, for assembled matrices).
    pub period: f64,
    pub symplectic_deviation: f64,
    pub det_deviation: f64,
    pub multipliers: Vec<Complex64>,
}

impl MonodromyResult {
    pub fn from_matrix(matrix: CMatrix, period: f64) -> Result<Self> {
        let n = matrix.nrows();
        if !n.is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                got: n,
            });
        }
        let symplectic_deviation = symplectic_deviation(&matrix, SymplecticForm::new(n / 2))?;
        let det_deviation = (det(&matrix)? - 1.0).norm();
        let multipliers = eigenvalues(&matrix)?;
        Ok(Self {
            matrix,
            period,
            symplectic_deviation,
            det_deviation,
            multipliers,
        })
    }

    pub fn max_multiplier_modulus(&self) -> f64 {
        self.multipliers.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// `Phi(t1)` of the full chain from `Phi(0) = I`.
pub fn fundamental(spec: &ChainSpec, t1: f64, cfg: &StepConfig) -> Result<RMatrix> {
    fundamental_between(spec, 0.0, t1, cfg)
}

/// Transition matrix of the full chain from `t0` to `t1`.
pub fn fundamental_between(
    spec: &ChainSpec,
    t0: f64,
    t1: f64,
    cfg: &StepConfig,
) -> Result<RMatrix> {
    let chain = FullChain::new(*spec)?;
    let d = 2 * spec.sites();
    let x = irk_integrate(
        &chain,
        &identity_state::<f64>(d),
        t0,
        t1,
        &ButcherTableau::gauss_legendre6(),
        cfg,
    )?;
    Ok(RMatrix::from_vec(d, d, x))
}

/// `m = Phi(tau)` of the full chain.
pub fn reduced_monodromy_matrix(spec: &ChainSpec, cfg: &StepConfig) -> Result<RMatrix> {
    spec.validate_progressive()?;
    fundamental(spec, spec.tau(), cfg)
}

pub fn reduced_monodromy(spec: &ChainSpec, cfg: &StepConfig) -> Result<MonodromyResult> {
    let m = reduced_monodromy_matrix(spec, cfg)?;
    MonodromyResult::from_matrix(to_complex(&m), spec.tau())
}

/// `S^Z (S^T m)^Z` from the full-chain reduced monodromy.
pub fn assemble_full_monodromy(m: &RMatrix, spec: &ChainSpec) -> Result<RMatrix> {
    spec.validate_progressive()?;
    let shift = ShiftOperator::full(spec);
    if m.nrows() != shift.dim() || m.ncols() != shift.dim() {
        return Err(Error::DimensionMismatch {
            expected: shift.dim(),
            got: m.nrows(),
        });
    }
    let shifted = shift.apply_to_real_matrix(m, true)?;
    let mut full = mat_pow(&shifted, spec.z);
    for _ in 0..spec.z {
        full = shift.apply_to_real_matrix(&full, false)?;
    }
    Ok(full)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FullMonodromyMethod {
    /// Integrate over `tau` and assemble.
    #[default]
    Factored,
    /// Integrate over the whole period.
    Direct,
}

pub fn full_monodromy_matrix(
    spec: &ChainSpec,
    cfg: &StepConfig,
    method: FullMonodromyMethod,
) -> Result<RMatrix> {
    spec.validate_progressive()?;
    match method {
        FullMonodromyMethod::Factored => {
            assemble_full_monodromy(&reduced_monodromy_matrix(spec, cfg)?, spec)
        }
        FullMonodromyMethod::Direct => fundamental(spec, spec.period(), cfg),
    }
}

pub fn full_monodromy(
    spec: &ChainSpec,
    cfg: &StepConfig,
    method: FullMonodromyMethod,
) -> Result<MonodromyResult> {
    let m = full_monodromy_matrix(spec, cfg, method)?;
    MonodromyResult::from_matrix(to_complex(&m), spec.period())
}

/// `Phi(tau)` of the Bloch cell, before the shift.
pub fn cell_reduced_matrix(spec: &ChainSpec, q_factor: Complex64, cfg: &StepConfig) -> Result<CMatrix> {
    spec.validate_progressive()?;
    let cell = BlochCell::new(*spec, q_factor)?;
    let d = 2 * spec.z;
    let x = irk_integrate(
        &cell,
        &identity_state::<Complex64>(d),
        0.0,
        spec.tau(),
        &ButcherTableau::gauss_legendre6(),
        cfg,
    )?;
    Ok(CMatrix::from_vec(d, d, x))
}

/// `S^H m` for the Bloch cell with factor `Q`.
pub fn cell_shifted_reduced(
    spec: &ChainSpec,
    q_factor: Complex64,
    cfg: &StepConfig,
) -> Result<MonodromyResult> {
    let m = cell_reduced_matrix(spec, q_factor, cfg)?;
    let shifted = ShiftOperator::cell(spec, q_factor).apply_to_matrix(&m, true)?;
    MonodromyResult::from_matrix(shifted, spec.tau())
}

/// Full-chain Floquet multiplier `Q* lambda^Z` generated by a cell multiplier.
pub fn full_multiplier_from_cell(lambda: Complex64, q_factor: Complex64, z: usize) -> Complex64 {
    q_factor.conj() * lambda.powu(z as u32)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StabilityReport {
    Stable {
        max_modulus: f64,
    },
    Unstable {
        max_modulus: f64,
        /// `ln max|lambda| / period`.
        growth_rate: f64,
    },
}

impl StabilityReport {
    pub fn is_stable(&self) -> bool {
        matches!(self, StabilityReport::Stable { .. })
    }

    pub fn max_modulus(&self) -> f64 {
        match *self {
            StabilityReport::Stable { max_modulus } => max_modulus,
            StabilityReport::Unstable { max_modulus, .. } => max_modulus,
        }
    }

    pub fn growth_rate(&self) -> f64 {
        match *self {
            StabilityReport::Stable { .. } => 0.0,
            StabilityReport::Unstable { growth_rate, .. } => growth_rate,
        }
    }
}

pub fn stability_report(result: &MonodromyResult, tol: f64) -> StabilityReport {
    classify_modulus(result.max_multiplier_modulus(), result.period, tol)
}

fn classify_modulus(max_modulus: f64, period: f64, tol: f64) -> StabilityReport {
    if max_modulus > 1.0 + tol {
        StabilityReport::Unstable {
            max_modulus,
            growth_rate: max_modulus.ln() / period,
        }
    } else {
        StabilityReport::Stable { max_modulus }
    }
}

/// Stability of the whole chain from its Bloch cells, one per allowed `Q`.
/// The reported modulus and rate refer to the reduced period `tau`.
pub fn chain_stability(spec: &ChainSpec, cfg: &StepConfig, tol: f64) -> Result<StabilityReport> {
    spec.validate_progressive()?;
    let moduli: Vec<f64> = crate::dispersion::bloch_set(spec)
        .par_iter()
        .map(|b| cell_shifted_reduced(spec, b.q_factor, cfg).map(|r| r.max_multiplier_modulus()))
        .collect::<Result<_>>()?;
    let max_modulus = moduli.into_iter().fold(0.0, f64::max);
    Ok(classify_modulus(max_modulus, spec.tau(), tol))
}
