use thiserror::Error;

/// Errors reported by the geometry engine and the family machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported jet order {requested} (maximum {max})")]
    UnsupportedOrder { requested: usize, max: usize },
    #[error("parameter point outside the chart domain: {0}")]
    Domain(String),
    #[error("invalid parameters for {family}: {constraint}")]
    Parameter { family: String, constraint: String },
    #[error("degenerate metric at node {node:?} (condition number {condition:.3e})")]
    Degenerate { node: Vec<f64>, condition: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("map singularity: {0}")]
    MapSingularity(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(family: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Parameter { family: family.into(), constraint: constraint.into() }
    }
}
