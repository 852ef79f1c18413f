use thiserror::Error;

use crate::lattice::Site;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("domain of {size} sites exceeds the dense solver cap of {cap} sites")]
    CapacityExceeded { size: usize, cap: usize },

    #[error("no convergence by M = {max_m}: last two iterates {previous} and {last}")]
    NonConvergence { max_m: i64, previous: f64, last: f64 },

    #[error("iterative solver stalled after {iterations} iterations (residual {residual:e})")]
    SolverStalled { iterations: usize, residual: f64 },

    #[error("site {0} is not in the domain")]
    SiteOutsideDomain(Site),

    #[error("missing boundary value at site {0}")]
    MissingBoundaryValue(Site),

    #[error("{context}: domain is missing site {missing}")]
    DomainTooSmall { context: String, missing: Site },

    #[error("missing classification for coarse vertex {0}")]
    MissingClassification(Site),

    #[error("target set is not contained in the domain (site {0})")]
    NotSubset(Site),

    #[error("geometry collision: {0}")]
    GeometryCollision(String),

    #[error("field file format error: {0}")]
    Format(String),

    #[error("NaN in record field `{0}`")]
    NotANumber(String),

    #[error("config error in key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub fn domain(context: impl Into<String>, missing: Site) -> Self {
        Error::DomainTooSmall {
            context: context.into(),
            missing,
        }
    }
}
