use thiserror::Error;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("variable index {index} out of range (problem has {num_vars} variables)")]
    VariableOutOfRange { index: usize, num_vars: usize },
    #[error("block {block}: entry ({row}, {col}) outside a {size}x{size} block")]
    EntryOutOfRange {
        block: usize,
        row: usize,
        col: usize,
        size: usize,
    },
    #[error("linear constraint {0} has no nonzero coefficient")]
    EmptyConstraint(usize),
    #[error("block {0} has size zero")]
    EmptyBlock(usize),
    #[error("cost vector has length {got}, expected {expected}")]
    CostLength { got: usize, expected: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("result carries no dual data")]
    MissingDual,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("SDPA parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SdpError>;
