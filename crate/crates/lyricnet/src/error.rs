use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed or invalid input data; `location` is a line number or byte offset.
    #[error("{}{location}: {detail}", .path.as_ref().map(|p| format!("{}:", p.display())).unwrap_or_default())]
    Data {
        path: Option<PathBuf>,
        location: String,
        detail: String,
    },

    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error(transparent)]
    Core(#[from] lyricnet_core::Error),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn data(path: Option<&Path>, location: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Data {
            path: path.map(Path::to_path_buf),
            location: location.into(),
            detail: detail.into(),
        }
    }

    /// Process exit status: 2 usage, 3 data validation, 4 training divergence, 5 integrity.
    pub fn exit_code(&self) -> i32 {
        use lyricnet_core::Error as C;
        match self {
            Error::Usage(_) => 2,
            Error::Io { .. } | Error::Data { .. } => 3,
            Error::Integrity(_) => 5,
            Error::Core(e) => match e {
                C::Diverged { .. } | C::NonFiniteGradient { .. } => 4,
                C::InvalidArgument(_) => 2,
                _ => 3,
            },
        }
    }
}
