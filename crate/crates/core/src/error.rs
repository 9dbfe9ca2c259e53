use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite field")]
    NonFinite,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: i32, got: i32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shooting bracket not found")]
    ShootingBracket,

    #[error("shooting did not converge after {iterations} iterations (last bracket [{lo:e}, {hi:e}])")]
    ShootingNoConvergence { iterations: usize, lo: f64, hi: f64 },

    #[error("spectral count mismatch: matrix {matrix}, shooting {shooting}")]
    SpectralCountMismatch { matrix: usize, shooting: usize },

    #[error("fundamental system degenerate (W = {0:e})")]
    DegenerateFundamentalSystem(f64),

    #[error("outside contraction regime (update norms {0:?})")]
    OutsideContraction(Vec<f64>),

    #[error("field rejected: origin behaviour inconsistent with degree {degree} (ratio {ratio:.3e})")]
    InadmissibleOrigin { degree: i32, ratio: f64 },

    #[error("tridiagonal solve failed: zero pivot at row {0}")]
    SingularTridiagonal(usize),

    #[error("companion field unavailable: {0}")]
    CompanionUnavailable(String),

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("blow-up detected at t = {t}: |eps|_inf = {sup:e}")]
    BlowUp { t: f64, sup: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
