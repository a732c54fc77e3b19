use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural invariant of an input value does not hold.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("not a right density point at this resolution: {0}")]
    NotDensityPoint(String),

    /// The proportion certificate of the density sequence failed at step `m`.
    #[error("sequence certificate failed at m = {m}: {detail}")]
    SequenceCertificate { m: usize, detail: String },

    /// Sampling could not produce constants satisfying the estimate.
    #[error("certification failed: {0}")]
    Certification(String),

    /// An audited inequality came out with negative slack.
    #[error("audit failed: {0}")]
    Audit(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invariant(msg: impl Into<String>) -> Error {
    Error::Invariant(msg.into())
}
