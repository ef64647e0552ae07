use std::process::ExitCode;

/// Failures surfaced by the front end, each tied to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or malformed input: exit 2.
    #[error("{0}")]
    Parse(String),
    /// Well-formed input outside an operation's domain, or a tripped
    /// resource guard: exit 3.
    #[error("{0}")]
    Domain(String),
    /// Reading or writing a file failed: exit 2 for inputs, 3 for outputs.
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
        input: bool,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Io { input, .. } => {
                if *input {
                    2
                } else {
                    3
                }
            }
        }
    }
}

impl From<otplab_core::Error> for CliError {
    fn from(e: otplab_core::Error) -> Self {
        match e {
            otplab_core::Error::Malformed(_) => CliError::Parse(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<CliError> for ExitCode {
    fn from(e: CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}

pub fn read_input(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
        input: true,
    })
}

pub fn write_output(path: &str, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
        input: false,
    })
}
