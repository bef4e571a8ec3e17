use std::fmt;

/// Command failure; the variant picks the exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad input, config or arguments: exit 1.
    User(String),
    /// Anything else: exit 2.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 1,
            CliError::Internal(_) => 2,
        }
    }

    pub fn internal(e: impl fmt::Display) -> Self {
        CliError::Internal(e.to_string())
    }

    pub fn user(e: impl fmt::Display) -> Self {
        CliError::User(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::User(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}
