use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("eigensolver did not converge on a {dim}x{dim} matrix (norm {norm:.3e})")]
    EigenNoConvergence { dim: usize, norm: f64 },

    #[error(
        "fixed-point iteration did not converge at t = {t}: residual {residual:.3e} after {iters} iterations (step too large?)"
    )]
    FixedPointNoConvergence { t: f64, residual: f64, iters: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("monodromy matrix is non-physical: |det - 1| = {0:.3e}")]
    NonPhysical(f64),

    #[error("change of variables not one-to-one: modulation speed {c} reaches the local sound speed")]
    SonicCrossing { c: f64 },

    #[error("no sign flip below sonic line")]
    NoCriticalSpeed,

    #[error("parametrically degenerate configuration: {0}")]
    Degenerate(String),

    #[error("solution overflow at t = {t}: norm grew by {growth:.3e}")]
    Overflow { t: f64, growth: f64 },

    #[error("Fourier window |j| <= {window} exceeds Nyquist limit {nyquist}")]
    Aliasing { window: usize, nyquist: usize },

    #[error("wave front wrapped around the periodic chain after {samples} samples; use a larger chain or a shorter run")]
    Wraparound { samples: usize },

    #[error("quadrature failed: {0}")]
    Quadrature(String),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to inputs
    /// that lie outside the model's domain of validity.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::EigenNoConvergence { .. }
                | Error::FixedPointNoConvergence { .. }
                | Error::Overflow { .. }
                | Error::Quadrature(_)
                | Error::NonFinite
        )
    }
}
