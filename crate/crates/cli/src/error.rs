use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}{}: `{field}`: {message}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Config {
        origin: String,
        line: Option<usize>,
        field: String,
        message: String,
    },

    #[error("{stage}: {source}")]
    Numerical {
        stage: String,
        #[source]
        source: abwave_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Attaches a pipeline stage to a core error. Malformed-input errors from
/// the core become configuration errors.
pub trait Stage<T> {
    fn stage(self, stage: &str) -> Result<T, CliError>;
}

impl<T> Stage<T> for Result<T, abwave_core::Error> {
    fn stage(self, stage: &str) -> Result<T, CliError> {
        self.map_err(|e| {
            if e.is_numerical() {
                CliError::Numerical {
                    stage: stage.to_string(),
                    source: e,
                }
            } else {
                CliError::Config {
                    origin: "config".into(),
                    line: None,
                    field: stage.to_string(),
                    message: e.to_string(),
                }
            }
        })
    }
}
