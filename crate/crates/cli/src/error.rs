use std::path::Path;

use thiserror::Error;

/// Failure of anything the binary does before or after the numerics: reading
/// inputs, understanding the configuration, or writing artifacts. Every
/// variant maps to process exit code 2; solver non-convergence is not an
/// error (the run still writes its artifacts and exits 1).
#[derive(Debug, Error)]
pub enum CliError {
    /// A file exists but its contents violate the declared format. The
    /// detail names the position (line or byte offset) when one is known.
    #[error("{path}: {detail}")]
    InputFormat { path: String, detail: String },
    /// Bad or contradictory parameters, from flags or the config file.
    #[error("config: {0}")]
    Config(String),
    /// The operating system refused a read or write.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// A solver rejected its inputs (dimension or parameter mismatch).
    #[error("solver: {0}")]
    Solver(String),
}

impl CliError {
    pub fn input(path: &Path, detail: impl Into<String>) -> Self {
        CliError::InputFormat {
            path: path.display().to_string(),
            detail: detail.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

macro_rules! from_solver {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(err: $ty) -> Self {
                CliError::Solver(err.to_string())
            }
        }
    )*};
}

from_solver!(
    unmix::MatError,
    unmix::BrpError,
    unmix::GodecError,
    unmix::GrebError,
    unmix::LinGodecError,
    unmix::SynthError
);
