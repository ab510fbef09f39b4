use thiserror::Error;

/// Errors raised by the kernel library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("material validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("unknown material '{name}'; available: {available}")]
    UnknownMaterial { name: String, available: String },

    #[error("singular symbol at direction ({:.6}, {:.6}, {:.6}): condition number {cond:.3e}", .direction[0], .direction[1], .direction[2])]
    SingularSymbol { direction: [f64; 3], cond: f64 },

    #[error("range error: {0}")]
    Range(String),

    #[error("singular evaluation point{}: |r| = 0", .index.map(|i| format!(" at index {i}")).unwrap_or_default())]
    ZeroDistance { index: Option<usize> },

    #[error("tables are inconsistent: {0}")]
    Consistency(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unsupported oracle: {0}")]
    UnsupportedOracle(String),

    #[error("table format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("material hash mismatch: table has {found}, expected {expected}")]
    HashMismatch { found: String, expected: String },

    #[error("corrupt table file: {0}")]
    Corrupt(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status for the command-line tool: 2 validation, 3 singular
    /// symbol, 4 hash mismatch, 5 zero evaluation point, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 2,
            Error::SingularSymbol { .. } => 3,
            Error::HashMismatch { .. } => 4,
            Error::ZeroDistance { .. } => 5,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
