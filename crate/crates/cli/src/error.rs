use std::io;
use std::path::PathBuf;

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("scenario {scenario}: {source}")]
    Numerical {
        scenario: String,
        #[source]
        source: cavity_trps::Error,
    },
    #[error("scenario {scenario}: check {check} failed: {detail}")]
    CheckFailed {
        scenario: String,
        check: String,
        detail: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("plot script would reference missing file {0}")]
    DanglingReference(String),
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical-invariant violations,
    /// 1 for anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical { .. } | Self::CheckFailed { .. } => 3,
            Self::Io { .. } | Self::DanglingReference(_) => 1,
        }
    }
}
