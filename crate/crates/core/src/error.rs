use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("level {level} out of range for a {width}-bit one-hot word")]
    LevelOutOfRange { level: usize, width: usize },

    #[error("malformed one-hot word {word}: {set_bits} bits set")]
    MalformedWord { word: String, set_bits: u32 },

    #[error("channels {previous} and {active} are both conducting; the output is not one-hot")]
    Overlap { previous: usize, active: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid filter design: {0}")]
    Design(String),

    #[error("{what}: denominator is zero")]
    ZeroDenominator { what: &'static str },

    #[error("trace too short: {rows} rows, none remain after a {settling}s settling window")]
    TraceTooShort { rows: usize, settling: f64 },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by the filesystem rather than by bad input.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
