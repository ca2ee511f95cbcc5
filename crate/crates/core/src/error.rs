use thiserror::Error;

/// Errors produced by the library.
///
/// Variants are split so that callers (the CLI in particular) can tell
/// malformed input apart from numerical trouble.
#[derive(Debug, Error)]
pub enum BvpError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("boundary rank deficient: rank {rank} < order {order}")]
    RankDeficient { rank: usize, order: usize },

    #[error("{path}: row count {rows} != order {order}")]
    OrderMismatch {
        path: String,
        rows: usize,
        order: usize,
    },

    #[error("numerical rank ambiguous at derivative order {order}: ratio {ratio:e}")]
    RankAmbiguous { order: usize, ratio: f64 },

    #[error("F(s) defined only for even order (got n = {0})")]
    OddOrder(usize),

    #[error("operation requires order {expected}, got {got}")]
    WrongOrder { expected: usize, got: usize },

    #[error("lambda must be nonzero")]
    ZeroLambda,

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("irregular: limit undefined (regularity matrix is singular)")]
    IrregularLimit,

    #[error("rho = {rho} lies within {distance:e} of a characteristic value")]
    NearSpectrum { rho: String, distance: f64 },

    #[error("ODE integration failed: {0}")]
    Integration(String),

    #[error("root search failed: {0}")]
    RootSearch(String),

    #[error("not a characteristic value: smallest singular value {0:e}")]
    NotCharacteristic(f64),

    #[error("null space dimension {found} exceeds multiplicity {multiplicity}")]
    NullSpaceMismatch { found: usize, multiplicity: usize },

    #[error("projector contour encloses foreign spectrum (rank {rank}, expected {expected})")]
    ForeignSpectrum { rank: usize, expected: usize },

    #[error("multiple eigenvalue at index {0}; scaling report needs simple eigenvalues")]
    MultipleEigenvalue(usize),

    #[error("derivative order {0} exceeds the supported maximum of 5")]
    DerivativeOrder(usize),

    #[error("good domain empty for m = {m} (removed fraction {removed:.3})")]
    EmptyGoodDomain { m: usize, removed: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BvpError {
    /// True for errors caused by the problem specification rather than by the numerics.
    pub fn is_spec_error(&self) -> bool {
        matches!(
            self,
            BvpError::Schema { .. }
                | BvpError::RankDeficient { .. }
                | BvpError::OrderMismatch { .. }
                | BvpError::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, BvpError>;
