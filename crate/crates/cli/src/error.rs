use std::fmt;

/// CLI failure classes mapped to exit codes: usage 2, I/O 3, numerical 4.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Numeric(m) => write!(f, "{m}"),
        }
    }
}

impl From<robin_core::Error> for CliError {
    fn from(e: robin_core::Error) -> Self {
        use robin_core::Error as E;
        match &e {
            E::Read { .. }
            | E::Write { .. }
            | E::UnsupportedFormat { .. }
            | E::MalformedImage { .. }
            | E::ZeroSized { .. } => CliError::Io(e.to_string()),
            E::InvalidConfig { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
