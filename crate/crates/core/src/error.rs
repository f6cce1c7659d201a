use num_bigint::BigUint;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("block {block:?} (mass {mass}) cannot be split into {parts} parts of equal mass")]
    Divisibility {
        block: Vec<usize>,
        mass: String,
        parts: usize,
    },

    #[error("restriction to a set of zero mass")]
    EmptyRestriction,

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("interval is not aligned to dyadic level {level}")]
    Misaligned { level: u32 },

    #[error("dyadic level {level} too coarse for Walsh index {index}")]
    LevelTooCoarse { index: u64, level: u32 },

    #[error("dimension {have} too small: construction needs at least {need}")]
    DimensionTooSmall { have: usize, need: usize },

    #[error("{count} selections exceed the cap of {cap}; use Minkowski accumulation mode")]
    Capacity { count: BigUint, cap: u64 },

    #[error("no measurable selection: value sets on block {block:?} have empty intersection")]
    NoSelection { block: Vec<usize> },

    #[error("block {0:?} has zero mass")]
    DegenerateBlock(Vec<usize>),

    #[error("invalid selection: {0}")]
    InvalidSelection(String),

    #[error("overlapping indicator supports at {0}")]
    OverlappingSupports(String),

    #[error("parse error: {0}")]
    Parse(String),
}
