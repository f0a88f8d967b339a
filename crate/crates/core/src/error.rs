use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("infeasible: payload {payload} bits exceeds the maximum achievable capacity {max_capacity} bits")]
    Infeasible { payload: f64, max_capacity: f64 },

    #[error("search space of {size} candidates exceeds the cap of {cap}")]
    SearchSpaceTooLarge { size: u128, cap: u128 },

    #[error("one-hot block {block} is not within tolerance of a vertex")]
    FractionalBlock { block: usize },

    #[error("message needs {needed} bits but the coding offers only {available}")]
    CapacityExceeded { needed: u64, available: u64 },

    #[error("reserved bin {magnitude} is not empty")]
    NonEmptyReservedBins { magnitude: u32 },

    #[error("corrupt stego stream: {0}")]
    CorruptStream(String),

    #[error("embedding overflows pixel {index}: value {value} outside [0, 255]")]
    EmbeddingOverflow { index: usize, value: i32 },

    #[error("image of {width}x{height} is too small, need at least 3x3")]
    ImageTooSmall { width: usize, height: usize },

    #[error("malformed PGM at byte {offset}: {msg}")]
    Pgm { offset: usize, msg: String },

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("malformed histogram CSV: {0}")]
    HistogramCsv(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
