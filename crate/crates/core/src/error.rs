use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("metric is not positive-definite at node {node} (det = {det:e})")]
    Definiteness { node: usize, det: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("focal point reached near lambda = {lambda}; last valid lambda = {last_valid}")]
    FocalPointReached { lambda: f64, last_valid: f64 },

    #[error("graph left the background range at {} node(s) (first: {:?})", nodes.len(), nodes.first())]
    ExitedDomain { nodes: Vec<usize> },

    #[error("background is not a null cone: tr K = {value:e} at lambda index {lambda_index}, node {node}")]
    NotANullCone {
        lambda_index: usize,
        node: usize,
        value: f64,
    },

    #[error("capability unavailable: {0}")]
    Capability(String),

    #[error("time step underflow: dt = {dt:e} below dt_min at t = {t}")]
    Stiffness { t: f64, dt: f64 },

    #[error("precondition failed at {} node(s): {reason}", nodes.len())]
    Precondition { reason: String, nodes: Vec<usize> },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("lattice mismatch: {0}")]
    Lattice(String),

    #[error("reparametrization failed: {0}")]
    Reparametrization(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
