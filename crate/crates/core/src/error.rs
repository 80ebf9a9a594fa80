use std::io;

use thiserror::Error;

/// Errors raised by the memory, codec, theory and file-format layers.
#[derive(Debug, Error)]
pub enum QvamError {
    #[error("alphabet size q = {0} is invalid (need 2 <= q)")]
    InvalidAlphabet(u64),

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("symbol {symbol} at position {position} is outside the alphabet 0..{q}")]
    SymbolOutOfRange {
        position: usize,
        symbol: u32,
        q: u32,
    },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("alphabet mismatch: expected q = {expected}, got q = {actual}")]
    AlphabetMismatch { expected: u32, actual: u32 },

    #[error("pattern index {index} does not fit in {digits} base-{q} digits")]
    KeyOutOfRange { index: u64, q: u32, digits: usize },

    #[error("at least one pattern is required")]
    Empty,

    #[error("count overflow: {0}")]
    Overflow(String),

    #[error("no signal: effective dimension is zero (distortion b = 1)")]
    NoSignal,

    #[error("target error probability {0} must lie strictly between 0 and 1")]
    InvalidProbability(f64),

    #[error("distortion fraction {0} must lie in [0, 1]")]
    InvalidDistortion(f64),

    #[error("chunk width r = {0} must lie in 1..=30")]
    InvalidChunkWidth(u32),

    #[error("malformed {format} data: {reason}")]
    Format {
        format: &'static str,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = QvamError> = std::result::Result<T, E>;
