use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("boundary composition ∂{degree}∘∂{} is not zero", degree + 1)]
    BoundarySquareNonzero { degree: usize },

    #[error("boundary matrix shapes do not chain at degree {degree}")]
    ShapeMismatch { degree: usize },

    #[error("subcomplex is not contained in the ambient cell set")]
    NotSubset,

    #[error("cell set is not closed under taking faces")]
    NotFaceClosed,

    #[error("invalid Mayer-Vietoris triad: {0}")]
    InvalidTriad(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite state at t = {time}")]
    NonFinite { time: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("isolation margin absent: {0}")]
    NoIsolationMargin(String),

    #[error("not isolating: no tested horizon up to T = {t_max} separates G^T from the boundary")]
    NotIsolating { t_max: f64 },

    #[error("level family: {0}")]
    LevelFamily(String),

    #[error("no plateau: composite image ranks still change at the top two levels (degrees {degrees:?})")]
    NoPlateau { degrees: Vec<i64> },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate critical point at {point:?} (min |eigenvalue| = {min_abs_eig:.3e})")]
    DegenerateCriticalPoint { point: Vec<f64>, min_abs_eig: f64 },

    #[error("resolution insufficient: orbit clusters {distance:.3e} apart (threshold {threshold:.3e})")]
    ResolutionInsufficient { distance: f64, threshold: f64 },

    #[error("unstable sphere of dimension {0} is not supported by the shooting method")]
    UnsupportedShooting(usize),

    #[error("fast-slow parameter r = {r} is not above the threshold {threshold}")]
    RBelowThreshold { r: f64, threshold: f64 },

    #[error("Lyapunov condition violated at {point:?}: {reason}")]
    LyapunovViolation { point: Vec<f64>, reason: String },

    #[error("isolation lost at s = {s}")]
    IsolationLost { s: f64 },

    #[error("no admissible Galerkin level in the ladder")]
    NoAdmissibleLevel,
}
