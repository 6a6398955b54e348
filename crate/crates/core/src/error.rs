use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite state component {component} at step {step}")]
    NonFiniteState { step: usize, component: usize },

    #[error("invalid chain specification: {0}")]
    InvalidChain(String),

    #[error("generator is reducible: positive-rate graph is not strongly connected")]
    ReducibleChain,

    #[error("filter weights collapsed")]
    DegenerateFilter,

    #[error("particle position {0} is not a state of the chain")]
    UnknownState(f64),

    #[error("argument outside domain: {0}")]
    OutOfDomain(String),

    #[error("quadrature did not reach tolerance {tolerance:e} (estimate {estimate}, error {error:e}, {evaluations} evaluations)")]
    QuadratureFailure {
        estimate: f64,
        error: f64,
        tolerance: f64,
        evaluations: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
