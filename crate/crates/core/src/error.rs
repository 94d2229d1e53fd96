use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("tensor is not antisymmetric: |B + B^T| = {norm:e}")]
    NotAntisymmetric { norm: f64 },

    #[error("subspace flags disagree: tangent and cotangent subspaces cannot be combined")]
    FlagMismatch,

    #[error("map is not fiber-preserving at the given point (base residual {residual:e})")]
    NotFiberPreserving { residual: f64 },

    #[error("point is off the submanifold (constraint residual {residual:e})")]
    OffSubmanifold { residual: f64 },

    #[error("constraint jacobian is rank deficient at the point (rank {rank} < {expected})")]
    RankDeficient { rank: usize, expected: usize },

    #[error("submanifold has no constraint representation")]
    NoConstraint,

    #[error("extension is not invariant along the distribution: directional derivative {derivative:e}")]
    NotInvariant { derivative: f64 },

    #[error("no control law supplied to the closed loop")]
    MissingControl,

    #[error("non-finite state at integration step {step}")]
    NonFinite { step: usize },

    #[error("invalid integration parameters: {0}")]
    InvalidStep(String),

    #[error("matching right-hand side is not vertical (base component {base_norm:e})")]
    NotVertical { base_norm: f64 },

    #[error("jacobian is singular at a sample point")]
    SingularJacobian,

    #[error("operation not available for this group action: {0}")]
    NonCatalogAction(String),

    #[error("point leaves the valid chart: {0}")]
    ChartInvalid(String),

    #[error("index out of range: {0}")]
    Index(String),
}

pub type Result<T> = std::result::Result<T, Error>;
