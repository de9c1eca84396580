use thiserror::Error;

/// Errors produced by the fidelity kernel, the integrators and the samplers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The closed form produced a value that cannot be a fidelity. This is a
    /// kernel bug, never a rounding artifact.
    #[error("one-shot fidelity {value} lies outside [0, 1]")]
    FidelityOutOfRange { value: f64 },

    #[error("coefficient {name} = {value} must be positive")]
    NonPositiveCoefficient { name: &'static str, value: f64 },

    /// Quadrature stopped before reaching the requested tolerance. Carries the
    /// best estimate so callers can still report it.
    #[error(
        "quadrature tolerance not reached: estimate {estimate} with error {error} after {n_evals} kernel calls"
    )]
    AccuracyNotReached {
        estimate: f64,
        error: f64,
        n_evals: u64,
    },

    #[error("second moment is smaller than the squared mean by {deficit:e}; tolerances too loose")]
    InconsistentMoments { deficit: f64 },

    #[error("rejection sampler gave up after {attempts} attempts")]
    SamplerExhausted { attempts: usize },

    #[error("Monte Carlo needs at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
}

impl Error {
    /// Stable machine-readable identifier, used in tabular output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::FidelityOutOfRange { .. } => "fidelity_out_of_range",
            Error::NonPositiveCoefficient { .. } => "non_positive_coefficient",
            Error::AccuracyNotReached { .. } => "accuracy_not_reached",
            Error::InconsistentMoments { .. } => "inconsistent_moments",
            Error::SamplerExhausted { .. } => "sampler_exhausted",
            Error::TooFewSamples { .. } => "too_few_samples",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
