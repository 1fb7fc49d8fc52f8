//! Exact symbolic algebra over sums of spin-1/2 operator words, plus the
//! dense realization used for oracles and propagation.

mod dense;
mod op;
mod rotation;
mod word;

pub use dense::{frob, mercator_log, to_dense, to_dense_capped, unitary_exp, DEFAULT_DENSE_CAP};
pub use op::OperatorSum;
pub use rotation::{Axis, FrameRotation, Mat3, Site, SiteRotation};
pub use word::{Letter, SpinWord};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AlgebraError {
    #[error("operator dimension mismatch: {left} vs {right} spins")]
    DimensionMismatch { left: usize, right: usize },
    #[error("site {site} out of range for {n} spins")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("rotation axis must have unit norm")]
    AxisNotUnit,
    #[error("dense realization capped at {cap} spins (requested {n})")]
    DenseCapExceeded { n: usize, cap: usize },
    #[error("matrix log requires a near-identity argument")]
    LogOutOfRange,
    #[error("not a valid spin word: {text:?}")]
    BadWord { text: String },
}
