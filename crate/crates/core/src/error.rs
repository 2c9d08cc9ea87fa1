use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::txdb::ItemId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("malformed record in {} at {location}: {message}", path.display())]
    Format {
        path: PathBuf,
        /// `line N` for text files, `byte N` for binary files.
        location: String,
        message: String,
    },

    #[error("scan position at byte {offset} is not a record boundary of {}", path.display())]
    StalePosition { path: PathBuf, offset: u64 },

    #[error("disk full while writing {}", .0.display())]
    DiskFull(PathBuf),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("memory budget of {budget} bytes cannot hold a single tree node")]
    BudgetTooSmall { budget: u64 },

    #[error("no item reaches the support threshold")]
    NoFrequentItems,

    #[error("recursion exceeded the maximum depth of {0}")]
    MaxDepthExceeded(u32),

    #[error("itemset {0:?} emitted by more than one part")]
    DuplicateItemset(Vec<ItemId>),

    #[error("brute-force oracle supports at most {limit} distinct items, got {found}")]
    TooLarge { limit: usize, found: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal consistency violated: {0}")]
    Consistency(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        let path = path.into();
        match source.kind() {
            io::ErrorKind::NotFound => Error::FileNotFound(path),
            io::ErrorKind::StorageFull => Error::DiskFull(path),
            _ => Error::Io { path, source },
        }
    }

    /// True for errors caused by the environment rather than by inputs or bugs.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::FileNotFound(_) | Error::DiskFull(_) | Error::Io { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
