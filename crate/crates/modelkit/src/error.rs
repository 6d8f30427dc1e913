use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular frequency z = {re:+e}{im:+e}i (too close to the spectrum of A0)")]
    SingularFrequency { re: f64, im: f64 },

    #[error(
        "singular boundary operator at z = {re:+e}{im:+e}i: min singular value {min_sv:e} below {threshold:e}"
    )]
    SingularBoundaryOperator {
        re: f64,
        im: f64,
        min_sv: f64,
        threshold: f64,
    },

    #[error("matrix numerically singular: sv ratio {ratio:e}")]
    SingularMatrix { ratio: f64 },

    #[error("pole on the real axis at k = {re}")]
    PoleOnRealAxis { re: f64 },

    #[error("constant term not allowed in this operation")]
    ConstantTerm,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("z = {re:+e}{im:+e}i lies in the wrong half-plane for {what}")]
    WrongHalfPlane { re: f64, im: f64, what: &'static str },

    #[error("|Im z|*X = {product:e} too small for truncation at X (need >= {required:e})")]
    DomainTooShallow { product: f64, required: f64 },

    #[error("vector not in the requested span, relative residual {residual:e}")]
    NotInSpan { residual: f64 },

    #[error("eigenvalue iteration failed to converge")]
    EigenFailed,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid boundary condition: {0}")]
    InvalidBoundaryCondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
