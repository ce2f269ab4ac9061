use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical setup error: {0}")]
    NumericalSetup(String),
    #[error("mean-compatibility error: {0}")]
    MeanCompatibility(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// Short machine-readable category used by the CLI.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::Config(_) => "config",
            Error::Precondition(_) => "precondition",
            Error::Domain(_) => "domain",
            Error::NumericalSetup(_) => "numerical-setup",
            Error::MeanCompatibility(_) => "mean-compatibility",
            Error::Solver(_) => "solver",
            Error::SizeGuard(_) => "size-guard",
            Error::Io(_) => "io",
            Error::Format(_) => "format",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
