use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by graph ingestion, plan handling and metric evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// The input could not be parsed at all.
    #[error("parse error: {0}")]
    Parse(String),
    /// The input parsed but is missing fields or references unknown keys.
    #[error("schema error: {0}")]
    Schema(String),
    /// A structural invariant of the graph is violated.
    #[error("invariant violated: {0}")]
    Invariant(String),
    /// A plan does not fit the graph it is applied to.
    #[error("invalid plan: {0}")]
    Plan(String),
    /// A plan or configuration breaks a chain constraint.
    #[error("constraint violated: {0}")]
    Constraint(String),
    /// A metric or statistic is undefined on its input.
    #[error("undefined metric: {0}")]
    Metric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input data rather than the runtime environment.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}
