use std::fmt;

/// Exit status for a successful command.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_ORACLE: i32 = 4;

/// Command failure, classified by exit status.
#[derive(Debug)]
pub enum Failure {
    /// Invalid configuration or arguments; nothing was run.
    Config(String),
    /// Training aborted, I/O failed, or inputs were inconsistent.
    Runtime(anyhow::Error),
    /// A verification oracle observed an error above tolerance.
    Oracle(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
            Failure::Oracle(_) => EXIT_ORACLE,
        }
    }

    pub fn runtime(msg: impl fmt::Display) -> Self {
        Failure::Runtime(anyhow::anyhow!("{msg}"))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Runtime(e) => write!(f, "runtime error: {e:#}"),
            Failure::Oracle(m) => write!(f, "oracle check failed: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<moweight_core::Error> for Failure {
    fn from(e: moweight_core::Error) -> Self {
        match e {
            moweight_core::Error::Config(m) => Failure::Config(m),
            other => Failure::Runtime(other.into()),
        }
    }
}
