//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("signal too short: {len} samples, need at least {min} for depth {depth}")]
    SignalTooShort { len: usize, min: usize, depth: usize },

    #[error("decomposition depth {0} out of range (1..=14)")]
    DepthOutOfRange(usize),

    #[error("node ({level},{index}) invalid: index must be in 1..=2^level")]
    InvalidNode { level: usize, index: usize },

    #[error("analysis window too short: {got} leaf coefficients per node, need >= {min}")]
    WindowTooShort { got: usize, min: usize },

    #[error("rank-deficient design: {n_points} usable points for degree {degree}")]
    RankDeficient { n_points: usize, degree: usize },

    #[error("frames and noise estimates are misaligned at window {index}")]
    MisalignedWindows { index: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("unsupported WAV format in {path}: {detail}")]
    UnsupportedWav { path: PathBuf, detail: String },

    #[error("WAV error for {path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("I/O error for {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
