use std::borrow::Cow;

use thiserror::Error;

use crate::net_model::NodeId;

/// A configuration value violates its documented domain.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid `{field}`: {message}")]
pub struct ConfigError {
    pub field: Cow<'static, str>,
    pub message: String,
}

impl ConfigError {
    pub fn invalid(field: impl Into<Cow<'static, str>>, message: impl Into<String>) -> Self {
        ConfigError { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LookupError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("dimension mismatch: {left} vs {right}")]
pub struct DimensionError {
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImmuneError {
    #[error(transparent)]
    Dimension(#[from] DimensionError),
    #[error("training produced {achieved} of {requested} detectors before the attempt cap")]
    TrainingCoverage { achieved: usize, requested: usize },
    #[error("self set is empty")]
    EmptySelfSet,
    #[error("hamming affinity needs discrete-valued vectors")]
    NotDiscrete,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("verdict given for unknown node {0}")]
    UnknownNode(NodeId),
    #[error("experiment {0} sent no packets")]
    ZeroSent(usize),
    #[error("no experiments to aggregate")]
    Empty,
}

#[derive(Debug, Error)]
pub enum ResultsError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("row {row}: bad value `{value}` in column `{column}`")]
    BadValue { row: usize, column: &'static str, value: String },
}
