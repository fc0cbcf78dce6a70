use thiserror::Error;

/// Errors raised by the numerical routines and the experiment layer.
#[derive(Debug, Error)]
pub enum Error {
    /// A spatial or phase point lies outside the region an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),
    /// Invalid or inconsistent parameters.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// Inputs for which the requested construction degenerates (zero-length curves, origin in polar form).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// An operation was called outside of its supported setting.
    #[error("usage error: {0}")]
    Usage(String),
    /// A config document could not be parsed or is inconsistent.
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Short machine-readable tag, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Parameter(_) => "parameter",
            Error::Degenerate(_) => "degenerate",
            Error::Usage(_) => "usage",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Context { source, .. } => source.kind(),
        }
    }

    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Attach experiment context to a fallible result.
pub trait ResultExt<T> {
    fn context(self, context: impl FnOnce() -> String) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context(self, context: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| e.context(context()))
    }
}
