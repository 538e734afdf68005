use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point {x} lies outside the domain [{a}, {b}]")]
    Domain { x: f64, a: f64, b: f64 },

    /// An orbit or image left the domain of the map it is iterated under.
    #[error("invariance violated at step {step}: {point} escapes [{a}, {b}]")]
    Invariance { point: f64, step: usize, a: f64, b: f64 },

    #[error("domains differ: [{0}, {1}] vs [{2}, {3}]")]
    DomainMismatch(f64, f64, f64, f64),

    #[error("map has no shadow in the representable fragment: {0}")]
    NoShadow(String),

    #[error("no return within {max_time} iterates")]
    NoReturn { max_time: usize },

    #[error("displacement {displacement} is not below the bound {bound}")]
    DisplacementTooLarge { displacement: f64, bound: f64 },

    #[error("perturbation margin {0} is too small")]
    MarginTooSmall(f64),

    #[error("modulus-of-continuity iterate underflowed at step {step} ({value})")]
    ScheduleUnderflow { step: usize, value: f64 },

    #[error("precondition failed: sup distance {distance} is not below delta {delta}")]
    PreconditionFailed { distance: f64, delta: f64 },

    #[error("no data: {0}")]
    NoData(String),

    #[error("composition would exceed {limit} breakpoints")]
    TooManyNodes { limit: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
