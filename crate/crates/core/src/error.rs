use alloc::string::String;
use thiserror::Error;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("piece size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("image of {height}x{width} is smaller than one {piece_size}x{piece_size} piece")]
    ImageTooSmall {
        height: usize,
        width: usize,
        piece_size: usize,
    },
    #[error("erosion width {erosion} too large for piece size {piece_size}")]
    ErosionTooLarge { erosion: usize, piece_size: usize },
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("training corpus is unusable: {0}")]
    BadCorpus(String),
    #[error("candidate pool is empty after collision masking (batch too degenerate)")]
    EmptyCandidatePool,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("training diverged: loss is not finite at epoch {epoch}, iteration {iteration}")]
    Diverged { epoch: usize, iteration: usize },
    #[error("tensor covers {tensor_n} pieces but puzzle has {puzzle_n}")]
    TensorMismatch { tensor_n: usize, puzzle_n: usize },
    #[error("data mismatch: {0}")]
    DataMismatch(String),
}

pub type Result<T> = core::result::Result<T, Error>;
