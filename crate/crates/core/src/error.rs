use thiserror::Error;

use crate::channel::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid channel spec:\n{0}")]
    InvalidSpec(ValidationReport),

    /// `required` is `None` when the count does not even fit in 128 bits.
    #[error("strategy count {} exceeds the enumeration cap of {cap}", fmt_required(.required))]
    CapExceeded { required: Option<u128>, cap: u64 },

    #[error("codebook of {} words exceeds the cap of {cap}", fmt_required(.words))]
    CodebookTooLarge { words: Option<u128>, cap: u64 },

    #[error("index {index} out of range (count {count})")]
    IndexOutOfRange { index: u64, count: u64 },

    #[error("{what}: expected length {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("brute-force oracle handles at most {max} strategies, got {count}")]
    OracleTooLarge { count: usize, max: usize },

    #[error("CSIT is not a deterministic function of the CSIR")]
    NotDeterministicCsit,

    #[error("operation supports only block length 1, got {n0}")]
    UnsupportedBlockLength { n0: usize },

    #[error("no strategy distribution reproduces the input law (residual {residual:e})")]
    InversionInfeasible { residual: f64 },
}

fn fmt_required(n: &Option<u128>) -> String {
    match n {
        Some(n) => n.to_string(),
        None => "> 2^128".to_string(),
    }
}
