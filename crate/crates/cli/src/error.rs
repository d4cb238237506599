use bsquant::ParseError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid potential\n{}", .error.caret_diagnostic(.source_text))]
    Potential { source_text: String, error: ParseError },
    #[error(transparent)]
    Core(#[from] bsquant::Error),
    #[error("cannot write {path}: {error}")]
    Output { path: String, error: std::io::Error },
}

impl CliError {
    /// 1 for usage and parse errors, 2 for well geometry, 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Potential { .. } | CliError::Output { .. } => 1,
            CliError::Core(bsquant::Error::Parse(_) | bsquant::Error::InvalidInput(_)) => 1,
            CliError::Core(e) if e.is_geometry() => 2,
            CliError::Core(_) => 3,
        }
    }
}
