use thiserror::Error;

use crate::integrate::IntegrateError;
use crate::profile::ProfileError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("t = {t} outside [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("t = {t} is beyond the admissible radius (denominator {denominator:e})")]
    DomainExceeded { t: f64, denominator: f64 },
    #[error("r = {r} is too close to the pole")]
    PoleSingularity { r: f64 },
    #[error("g'(r) vanishes at r = {r}; check skipped")]
    SkippedCriticalRadius { r: f64 },
    #[error("operation requires a constant profile")]
    NotConstantProfile,
    #[error("path of length {length} is shorter than the required {required}")]
    PathTooShort { length: f64, required: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cannot load record: {0}")]
    Record(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
