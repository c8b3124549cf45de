use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// The shifted subdifferential contains the origin, so the normal cone
    /// is not the conical hull of that set and the width bound does not apply.
    #[error("0 lies in the shifted subdifferential d||x*||_1 - p; the width-bound hypothesis is violated")]
    ZeroInShiftedSubdifferential,

    #[error("descent-direction sampler degenerate: {accepted} of {attempted} draws accepted")]
    SamplerDegenerate { accepted: usize, attempted: usize },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
