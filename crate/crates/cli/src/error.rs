use std::fmt;

/// A failure mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, parameters or configuration. Exit code 1.
    Validation(String),
    /// Unreadable or malformed input data. Exit code 2.
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    pub fn data(context: impl fmt::Display, err: olps_core::Error) -> Self {
        let context = context.to_string();
        let detail = err.to_string();
        let msg = if detail.contains(&context) {
            detail
        } else {
            format!("{context}: {detail}")
        };
        if err.is_data_error() {
            CliError::Data(msg)
        } else {
            CliError::Validation(msg)
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) | CliError::Data(msg) => f.write_str(msg),
        }
    }
}

impl From<olps_core::Error> for CliError {
    fn from(err: olps_core::Error) -> Self {
        if err.is_data_error() {
            CliError::Data(err.to_string())
        } else {
            CliError::Validation(err.to_string())
        }
    }
}
