use std::path::{Path, PathBuf};

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] wavens_core::Error),
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn format(path: &Path, message: impl Into<String>) -> Self {
        CliError::Format {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn csv(path: &Path, err: csv::Error) -> Self {
        if !err.is_io_error() {
            return Self::format(path, err.to_string());
        }
        match err.into_kind() {
            csv::ErrorKind::Io(source) => Self::io(path, source),
            _ => unreachable!("checked io kind"),
        }
    }

    pub(crate) fn json(path: &Path, err: serde_json::Error) -> Self {
        if err.is_io() {
            Self::io(path, err.into())
        } else {
            Self::format(path, err.to_string())
        }
    }

    /// 2 for filesystem failures, 1 for everything the user can fix in the
    /// inputs.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 2,
            _ => 1,
        }
    }
}
