use thiserror::Error;

/// Failure modes of the pricing and verification routines.
///
/// Numeric context is carried as `f64` regardless of the scalar type used
/// for the computation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PricingError {
    #[error("invalid tenor: start {start} is after end {end}")]
    InvalidTenor { start: f64, end: f64 },

    #[error("degenerate variance {variance:e} over the pricing horizon")]
    DegenerateVariance { variance: f64 },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("firm value {v} is at or below the default barrier {barrier}")]
    BelowBarrier { v: f64, barrier: f64 },

    #[error("exercise multiple {exercise} must lie strictly between recovery {recovery} and 1")]
    InvalidExercise { exercise: f64, recovery: f64 },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("root is not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("grid resolution rejected: {0}")]
    ResolutionError(String),

    #[error("Monte-Carlo configuration error: {0}")]
    SeedError(String),

    #[error("time stepping too coarse: {steps_per_year} steps/year (minimum 50)")]
    StepError { steps_per_year: usize },
}

impl PricingError {
    /// Stable machine-readable name of the variant.
    pub fn name(&self) -> &'static str {
        match self {
            PricingError::InvalidTenor { .. } => "InvalidTenor",
            PricingError::DegenerateVariance { .. } => "DegenerateVariance",
            PricingError::DomainError(_) => "DomainError",
            PricingError::BelowBarrier { .. } => "BelowBarrier",
            PricingError::InvalidExercise { .. } => "InvalidExercise",
            PricingError::InvalidParams { .. } => "InvalidParams",
            PricingError::NoBracket { .. } => "NoBracket",
            PricingError::NoConvergence { .. } => "NoConvergence",
            PricingError::ResolutionError(_) => "ResolutionError",
            PricingError::SeedError(_) => "SeedError",
            PricingError::StepError { .. } => "StepError",
        }
    }
}

pub type Result<T> = std::result::Result<T, PricingError>;
