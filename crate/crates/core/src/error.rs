use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("block size {0} must be even and at least 2")]
    OddBlockSize(usize),
    #[error("packed vector is not conjugate symmetric at index {index}")]
    NotConjugateSymmetric { index: usize },
    #[error("imaginary residue {residue:e} after inverse transform exceeds tolerance")]
    ImaginaryResidue { residue: f64 },
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("dither {value} outside the open interval (-{bound}, {bound})")]
    DitherOutOfRange { value: f64, bound: f64 },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("noise family `{0}` has no density")]
    NoDensity(String),
    #[error("degenerate noise: variance must be positive for {0}")]
    DegenerateNoise(&'static str),
    #[error("inner scheme must have finite reading precision")]
    MissingPrecision,
    #[error("infeasible scheme parameters: {0}")]
    InfeasibleScheme(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("message {message} out of range for demand {demand} (size {size})")]
    MessageOutOfRange {
        demand: usize,
        message: usize,
        size: usize,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
