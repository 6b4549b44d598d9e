//! Error classification for exit codes.

use std::fmt;

/// Exit code 2 for bad invocations, 1 for everything that goes wrong while running.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn usage(e: impl Into<anyhow::Error>) -> Self {
        Failure::Usage(e.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<balltrack_core::error::DatasetError> for Failure {
    fn from(e: balltrack_core::error::DatasetError) -> Self {
        Failure::Runtime(e.into())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(e) | Failure::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

pub type CmdResult = Result<(), Failure>;

/// Shorthand for a usage failure with a formatted message.
macro_rules! usage {
    ($($arg:tt)*) => {
        $crate::failure::Failure::Usage(anyhow::anyhow!($($arg)*))
    };
}
pub(crate) use usage;
