use std::fmt;
use std::process::ExitCode;

/// Failure classes with stable process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Unexpected failure, e.g. an output file could not be written.
    Internal = 1,
    /// Unreadable or malformed input, bad flags or config.
    Input = 2,
    /// Well-formed input the analysis cannot handle (no video flow,
    /// degenerate data, fit failure).
    Domain = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub source: anyhow::Error,
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind as u8)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.source)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub trait Classify<T> {
    fn kind(self, kind: Kind) -> Result<T>;

    fn input(self) -> Result<T>
    where
        Self: Sized,
    {
        self.kind(Kind::Input)
    }

    fn domain(self) -> Result<T>
    where
        Self: Sized,
    {
        self.kind(Kind::Domain)
    }

    fn internal(self) -> Result<T>
    where
        Self: Sized,
    {
        self.kind(Kind::Internal)
    }
}

impl<T, E: Into<anyhow::Error>> Classify<T> for std::result::Result<T, E> {
    fn kind(self, kind: Kind) -> Result<T> {
        self.map_err(|e| CliError { kind, source: e.into() })
    }
}

pub fn input_error(msg: impl fmt::Display) -> CliError {
    CliError { kind: Kind::Input, source: anyhow::anyhow!("{msg}") }
}
