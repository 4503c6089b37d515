use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Variants are grouped the way the command line reports them: invalid
/// inputs map to a configuration failure, numerical aborts to their own
/// exit code.
#[derive(Debug, Error)]
pub enum PsdError {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resolvability constraint `{constraint}` violated: {detail}")]
    Resolvability { constraint: &'static str, detail: String },

    #[error("partition block {block} carries no amplitude mass")]
    EmptyBlock { block: usize },

    #[error("block-count mismatch: partition has {blocks} blocks, decomposition has {components} components")]
    BlockCountMismatch { blocks: usize, components: usize },

    #[error("parents differ by {residual:.3e} (relative), tolerance {tol:.3e}")]
    ParentMismatch { residual: f64, tol: f64 },

    #[error("numerical abort: {0}")]
    Numerical(String),

    #[error("truncation leakage: top Fock levels hold population {population:.3e}")]
    TruncationLeakage { population: f64 },

    #[error("dimension {dim} exceeds configured cap {cap}")]
    DimensionOverflow { dim: usize, cap: usize },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl PsdError {
    /// True for failures caused by the inputs rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        !matches!(self, PsdError::Numerical(_) | PsdError::TruncationLeakage { .. } | PsdError::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, PsdError>;
