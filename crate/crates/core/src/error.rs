use thiserror::Error;

use crate::density::Certificate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range (available depth {depth})")]
    IndexOutOfRange { index: usize, depth: usize },

    #[error("invalid lambda sequence: {0}")]
    InvalidLambda(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid target function: {0}")]
    InvalidTarget(String),

    #[error("synthesized sequence could not be verified: {0}")]
    SynthesisUnverified(String),

    #[error("value outside the admissible domain: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("certificate failed at {}", offending.join(", "))]
    CertificateFailed {
        offending: Vec<String>,
        certificate: Box<Certificate>,
    },

    #[error("certificate undecided after precision escalation at {}", pending.join(", "))]
    CertificateIndeterminate {
        pending: Vec<String>,
        certificate: Box<Certificate>,
    },

    #[error("derivative too small for reparametrization: |a'(t)| = {speed:e} at t = {at}")]
    DegenerateDerivative { at: f64, speed: f64 },

    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
