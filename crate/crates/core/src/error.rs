use thiserror::Error;

/// Errors raised by the library. Variants map one-to-one onto the failure
/// modes of the public operations; the CLI turns a few of them into stable
/// exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid set: {0}")]
    InvalidSet(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid scale function: {0}")]
    InvalidScale(String),
    #[error("invalid function: {0}")]
    InvalidFunction(String),
    #[error("operation requires a bounded state space")]
    Unbounded,
    #[error("tolerance {tol:e} not achievable (best width {achieved:e})")]
    TolNotAchievable { tol: f64, achieved: f64 },
    #[error("measure is trivial: l >= r")]
    TrivialMeasure,
    #[error("speed function is infinite at {0}")]
    InfiniteValue(f64),
    #[error("integrand lacks compact support on an unbounded domain")]
    UnboundedDomain,
    #[error("scale function is not strictly increasing on the support of the measure near {0}")]
    NotInjective(f64),
    #[error("characteristic set is not measure-dense: zero measure on ({0}, {1})")]
    NotMeasureDense(f64, f64),
    #[error("could not certify the decision at the requested tolerance")]
    Undecided,
    #[error("scale function is not in the admissible family: {0}")]
    NotInS(String),
    #[error("not in the admissible family relative to the base scale: {0}")]
    NotInSs(String),
    #[error("function outside the form domain: {0}")]
    DomainViolation(String),
    #[error("forms do not share the same state space and speed measure")]
    MismatchedBase,
    #[error("a chain needs at least two states, got {0}")]
    TooFewStates(usize),
    #[error("{0} is not a state of the chain")]
    NotReachable(f64),
    #[error("condition (QK) violated: killing inside the state space")]
    QkViolated,
    #[error("state space is unbounded")]
    UnboundedSpace,
    #[error("operation requires the natural scale")]
    NotNaturalScale,
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
