use thiserror::Error;

/// Errors produced by the numerics library and the scenario runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not antisymmetric (entry ({row}, {col}))")]
    NotAntisymmetric { row: usize, col: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("ill-conditioned matrix (condition number {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),

    #[error("operands live on different quantum tori")]
    FormMismatch,

    #[error("empty index set")]
    EmptyIndexSet,

    #[error("truncation tail bound {bound:.3e} exceeds tolerance {tolerance:.3e}")]
    TailBound { bound: f64, tolerance: f64 },

    #[error("lift is not a homomorphism at generator pair ({0}, {1})")]
    NotHomomorphism(usize, usize),

    #[error("structure form is not symmetric at pair ({0}, {1})")]
    NotSymmetric(usize, usize),

    #[error("multiplier is not ample")]
    NotAmple,

    #[error("quantization form is not antisymmetric at pair ({0}, {1})")]
    Antisymmetry(String, String),

    #[error("invalid cochain: {0}")]
    Cochain(String),

    #[error("projection onto the finite part is not surjective (image {image}, expected {expected})")]
    NotSurjective { image: usize, expected: usize },

    #[error("incompatible data: {0}")]
    Incompatible(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown check `{0}`")]
    UnknownCheck(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
