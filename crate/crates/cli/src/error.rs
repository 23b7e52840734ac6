use std::fmt;

/// Failure of a command, carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, config file or parameter values (exit 2).
    Usage(String),
    /// Argument parsing stopped by clap; help and version requests exit 0.
    Clap(clap::Error),
    /// A verification check failed (exit 1).
    CheckFailed(String),
    /// The computation itself failed (exit 3).
    Numerical(String),
}

impl CliError {
    pub fn from_clap(e: clap::Error) -> Self {
        CliError::Clap(e)
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Clap(_) => 2,
            CliError::CheckFailed(_) => 1,
            CliError::Numerical(_) => 3,
        }
    }

    /// Manifest status for this failure.
    pub fn status(&self) -> &'static str {
        match self.exit_code() {
            0 => "ok",
            1 => "check-failed",
            2 => "usage-error",
            _ => "numerical-failure",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::CheckFailed(m) | CliError::Numerical(m) => f.write_str(m),
            CliError::Clap(e) => write!(f, "{}", e.render()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<couette::Error> for CliError {
    fn from(e: couette::Error) -> Self {
        use couette::Error as E;
        match e {
            E::InvalidGrid(_)
            | E::UnsupportedOrder(_)
            | E::GridMismatch(_)
            | E::Domain(_)
            | E::UnknownFamily { .. }
            | E::InvalidInput(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numerical(format!("io error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Numerical(format!("serialization error: {e}"))
    }
}
