use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible sparsity: m0={m0} + (a-1)*eta={span} exceeds N={n}")]
    InfeasibleSparsity { n: usize, m0: usize, span: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("zero-norm input to {0}")]
    ZeroNorm(&'static str),

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("bisection failed to bracket the power constraint after {0} doublings")]
    Bracket(usize),

    #[error("unknown {kind} `{value}`")]
    Unknown { kind: &'static str, value: String },

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
