use std::path::{Path, PathBuf};

/// Failures surfaced to the command line, each with its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error("numerical failure in {operation}: {source}")]
    Numerical {
        operation: String,
        source: sbbp_core::Error,
    },
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", .path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {detail}", .path.display())]
    Format { path: PathBuf, detail: String },
    #[error("{0} validation check(s) failed")]
    ChecksFailed(usize),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(vec![msg.into()])
    }

    pub fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn csv(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
        move |source| CliError::Csv {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, detail: impl Into<String>) -> Self {
        CliError::Format {
            path: path.to_path_buf(),
            detail: detail.into(),
        }
    }

    /// 2 for configuration errors, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            _ => 1,
        }
    }
}

/// Maps a core error raised by `operation`. Configuration errors from the
/// core keep exit code 2.
pub fn numerical(operation: &'static str) -> impl FnOnce(sbbp_core::Error) -> CliError {
    move |source| match source {
        sbbp_core::Error::Config(msg) => CliError::Config(vec![msg]),
        source => CliError::Numerical {
            operation: operation.into(),
            source,
        },
    }
}
