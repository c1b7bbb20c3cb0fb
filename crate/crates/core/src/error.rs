use thiserror::Error;

/// Everything that can go wrong while loading data, scoring subsets or searching.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty column")]
    EmptyColumn,

    #[error("no such column: {0}")]
    NoSuchColumn(String),

    #[error("duplicate column: {0}")]
    DuplicateColumn(String),

    #[error("column {name} has {len} entries, expected {expected}")]
    RaggedColumn {
        name: String,
        len: usize,
        expected: usize,
    },

    #[error("non-finite value in column {name} at row {row}")]
    NonFinite { name: String, row: usize },

    #[error("empty feature subset")]
    EmptySubset,

    #[error("dataset has no features besides the target")]
    NoFeatures,

    #[error("degenerate target: cumulative entropy is zero")]
    DegenerateTarget,

    #[error("infeasible cell count {count} (feasible range {lo}..={hi})")]
    InfeasibleCellCount { count: usize, lo: usize, hi: usize },

    #[error("no gap beyond last value (row {row} of {rows})")]
    NoGapBeyondLast { row: usize, rows: usize },

    #[error("invalid discretization parameter: {0}")]
    InvalidDiscretization(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("exhaustive search too large: {nodes} nodes exceed the budget of {budget}")]
    BudgetExceeded { nodes: u128, budget: u128 },

    #[error("target not found: {0}")]
    TargetNotFound(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("too few samples: {0} rows (need at least 3)")]
    TooFewSamples(usize),

    #[error("augmentation name clash: {0}")]
    AugmentationNameClash(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
