use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("{what} is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { what: &'static str, deviation: f64 },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("memory function is negative at lag {lag}: {value:.3e}")]
    KernelPositivity { lag: f64, value: f64 },

    #[error("jump operators do not satisfy sum A A^dagger = c I (residual {residual:.3e})")]
    KernelNormalization { residual: f64 },

    #[error("quadrature did not converge (estimated relative error {estimate:.3e})")]
    Quadrature { estimate: f64 },

    #[error("flat spectrum has a delta-like memory function; route it to Lindblad terms")]
    FlatSpectrum,

    #[error("memory function has not decayed at lag {lag}: |S| = {value:.3e} > {threshold:.3e}")]
    KernelNotDecayed {
        lag: f64,
        value: f64,
        threshold: f64,
    },

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("time {t} is not on the history grid")]
    OffGrid { t: f64 },

    #[error("invariant violated at t = {t}: {what}")]
    Invariant { t: f64, what: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("time step {dt} too large: {reason}")]
    StepTooLarge { dt: f64, reason: String },

    #[error("correlation has not decayed: |C(tau_max)| = {tail:.3e} > 1e-4 * {peak:.3e}")]
    NotDecayed { tail: f64, peak: f64 },

    #[error("found {found} peaks, expected {expected}")]
    PeakDetection { found: usize, expected: usize },

    #[error("state is not stationary at t = {t}: drift {drift:.3e}")]
    NotStationary { t: f64, drift: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
