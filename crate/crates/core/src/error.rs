use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge for eigenvalue {index}: residual {residual:.3e}")]
    EigenNotConverged { index: usize, residual: f64 },

    #[error("no interior minimum in [{lo}, {hi}]; widen the bracket")]
    NoInteriorMinimum { lo: f64, hi: f64 },

    #[error("level set lambda = {level} is empty: {reason}")]
    EmptyInterval { level: f64, reason: String },

    #[error("step-halving inconsistency {relative:.3e} exceeds {limit:.3e} ({what})")]
    StepHalving {
        what: &'static str,
        relative: f64,
        limit: f64,
    },

    #[error("ill-conditioned resolvent: b = {b} is within {gap:.3e} of the second eigenvalue")]
    IllConditioned { b: f64, gap: f64 },

    #[error("solver failed to converge: {method} after {iterations} iterations, residual history tail {history:?}")]
    NotConverged {
        method: &'static str,
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("fixed-point iteration does not contract (ratio {ratio:.3}); use the variational solver instead")]
    NoContraction { ratio: f64 },

    #[error("energy is not unimodal in alpha: {count} local minima on the coarse scan")]
    NotUnimodal { count: usize },

    #[error("extrapolation fit residual {residual:.3e} above threshold {limit:.3e}; use larger R")]
    PoorFit { residual: f64, limit: f64 },

    #[error("L = {l} is outside the table range and below the critical value")]
    OutsideTable { l: f64 },

    #[error("zero set is empty")]
    EmptyZeroSet,

    #[error("zero set meets the boundary tangentially near ({x:.6}, {y:.6})")]
    TangentialIntersection { x: f64, y: f64 },

    #[error("field violates |B0| + |grad B0| > 0 near ({x:.6}, {y:.6})")]
    DegenerateField { x: f64, y: f64 },

    #[error("covering scale {ell} too large: {reason}")]
    ScaleTooLarge { ell: f64, reason: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Stable snake-case tag for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::InvalidGrid(_) => "invalid_grid",
            Self::InvalidArgument(_) => "invalid_argument",
            Self::EigenNotConverged { .. } => "eigen_not_converged",
            Self::NoInteriorMinimum { .. } => "no_interior_minimum",
            Self::EmptyInterval { .. } => "empty_interval",
            Self::StepHalving { .. } => "step_halving",
            Self::IllConditioned { .. } => "ill_conditioned",
            Self::NotConverged { .. } => "not_converged",
            Self::NoContraction { .. } => "no_contraction",
            Self::NotUnimodal { .. } => "not_unimodal",
            Self::PoorFit { .. } => "poor_fit",
            Self::OutsideTable { .. } => "outside_table",
            Self::EmptyZeroSet => "empty_zero_set",
            Self::TangentialIntersection { .. } => "tangential_intersection",
            Self::DegenerateField { .. } => "degenerate_field",
            Self::ScaleTooLarge { .. } => "scale_too_large",
            Self::Parse { .. } => "parse",
            Self::Io(_) => "io",
            Self::Json(_) => "json",
        }
    }
}
