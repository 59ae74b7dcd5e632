use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Why a command stopped; each variant maps to one process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unparseable or out-of-range configuration; the message names the field.
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("numerical failure while {context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: kppspread_core::Error,
    },

    /// A certificate check or residual bound failed.
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// `0` is reserved for success.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numerical { .. } => 3,
            CliError::Verification(_) => 4,
        }
    }
}

/// Attaches a description of the failing step to core errors.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T>;
}

impl<T> Context<T> for kppspread_core::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| CliError::Numerical {
            context: what(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::config("x").exit_code(), 2);
        assert_eq!(CliError::Verification("x".into()).exit_code(), 4);
        let e: Result<()> = Err(kppspread_core::Error::Precondition("p".into())).context(|| "testing".into());
        let e = e.unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("while testing"));
    }
}
