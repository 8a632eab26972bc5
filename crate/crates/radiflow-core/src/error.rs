use core::fmt;

use alloc::string::String;

/// Every failure the core crate can report.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    InvalidParams(String),
    AmbiguousRegime(String),
    InvalidFamily(String),
    OverflowAtLargeT { t: f64 },
    DissipationViolation { t: f64, excess: f64 },
    DegenerateSplit,
    SingularTransform { det: f64 },
    PreconditionViolated(String),
    UnknownRegime(String),
    InvalidGrid(String),
    NaNDetected { field: &'static str },
    StepRejected { t: f64, max_b: f64 },
    EllipticSolveFailed,
    DegenerateFit,
    SmallnessExceeded { norm: f64, bound: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParams(m) => write!(f, "invalid parameters: {m}"),
            Error::AmbiguousRegime(m) => write!(f, "ambiguous regime: {m}"),
            Error::InvalidFamily(m) => write!(f, "invalid epsilon family: {m}"),
            Error::OverflowAtLargeT { t } => {
                write!(f, "matrix exponential overflows at t = {t}")
            }
            Error::DissipationViolation { t, excess } => {
                write!(f, "dissipation inequality violated at t = {t} (excess {excess:e})")
            }
            Error::DegenerateSplit => write!(f, "beta and gamma coincide, split is degenerate"),
            Error::SingularTransform { det } => {
                write!(f, "I + rho P is singular (det = {det:e})")
            }
            Error::PreconditionViolated(m) => write!(f, "precondition violated: {m}"),
            Error::UnknownRegime(m) => write!(f, "no norm defined for regime {m}"),
            Error::InvalidGrid(m) => write!(f, "invalid grid: {m}"),
            Error::NaNDetected { field } => write!(f, "non-finite value in field {field}"),
            Error::StepRejected { t, max_b } => {
                write!(f, "step rejected at t = {t}: max |b| = {max_b} >= 1")
            }
            Error::EllipticSolveFailed => write!(f, "elliptic solve for j0 failed"),
            Error::DegenerateFit => write!(f, "errors at round-off level, slope undefined"),
            Error::SmallnessExceeded { norm, bound } => {
                write!(f, "initial data too large: norm {norm:e} exceeds {bound:e}")
            }
        }
    }
}

impl core::error::Error for Error {}
