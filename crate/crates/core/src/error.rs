use thiserror::Error;

use crate::jordan_algebra::Algebra;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConeError {
    #[error("invalid algebra descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("algebra mismatch: {left} vs {right}")]
    AlgebraMismatch { left: Algebra, right: Algebra },

    #[error("expected {expected} coordinates, got {got}")]
    CoordinateLength { expected: usize, got: usize },

    #[error("element is singular (min |eigenvalue| = {min_abs:e}, threshold {threshold:e})")]
    SingularElement { min_abs: f64, threshold: f64 },

    #[error("element is not in the open cone (min eigenvalue = {min_eigenvalue:e})")]
    NotInCone { min_eigenvalue: f64 },

    #[error("shape parameter p = {p} out of range (requires p > {bound})")]
    ShapeOutOfRange { p: f64, bound: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid constants: {0}")]
    InvalidConstants(String),

    #[error("sampler failure: {0}")]
    Sampler(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, ConeError>;
