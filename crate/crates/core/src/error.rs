use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch{}: {detail}", .layer.map(|l| alloc::format!(" at layer {l}")).unwrap_or_default())]
    Shape { layer: Option<usize>, detail: String },

    #[error("non-finite gradient in {param}")]
    NonFiniteGradient { param: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid record {record}: field `{field}` {detail}")]
    Validation {
        record: String,
        field: &'static str,
        detail: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("stratification bin {bin} holds {count} samples, fewer than k={k}; use fewer bins")]
    SparseStratum { bin: usize, count: usize, k: usize },

    #[error("missing modality: {0}")]
    MissingModality(String),

    #[error("training diverged in {stage} (epoch {epoch}, batch {batch}): loss is not finite")]
    Diverged { stage: String, epoch: usize, batch: usize },
}

impl Error {
    pub(crate) fn shape(layer: Option<usize>, detail: impl Into<String>) -> Self {
        Error::Shape {
            layer,
            detail: detail.into(),
        }
    }
}
