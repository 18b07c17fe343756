/// Errors produced by the library.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// The data are too degenerate for the operation (zero spread, too few
    /// values, ...).
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    /// A mixture component lost essentially all posterior mass during EM.
    #[error("component collapse: {0}")]
    ComponentCollapse(String),
    /// Every EM start failed; the message carries per-start diagnostics.
    #[error("fit failure: {0}")]
    FitFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateData(msg.into())
    }
}
