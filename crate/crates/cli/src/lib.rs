//! Support library for the `cnv` binary: experiment configuration files
//! and the closed-form-versus-oracle verification suite. Kept as a library
//! so integration tests can drive the exact same code paths as the binary.

pub mod experiment;
pub mod oracle;

use thiserror::Error;

/// Command failures, split by whose fault they are. Usage errors (bad
/// arguments, malformed or invalid input files) exit with 2, runtime
/// failures (I/O, exhausted sweeps) with 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}
