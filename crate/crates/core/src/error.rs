use alloc::string::String;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// A specification, table or strategy is not total or violates its
    /// normalization invariants.
    #[error("construction rejected: {0}")]
    Malformed(String),
    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// The input is well-formed but the operation is undefined for it.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// An enumeration or allocation guard was exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

pub type Result<T> = core::result::Result<T, Error>;
