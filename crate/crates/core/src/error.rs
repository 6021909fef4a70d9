use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, EgdaError>;

#[derive(Debug, Error)]
pub enum EgdaError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}, field {field}: {message}")]
    Parse {
        line: usize,
        field: usize,
        message: String,
    },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("label count mismatch: expected {expected}, found {found}")]
    LabelCountMismatch { expected: usize, found: usize },

    #[error("label {label} at position {position} is out of range for {classes} classes")]
    LabelOutOfRange {
        position: usize,
        label: usize,
        classes: usize,
    },

    #[error("dataset has no labels")]
    MissingLabels,

    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("constraint matrix is numerically singular with ridge {ridge:e}; use a larger ridge")]
    SingularConstraint { ridge: f64 },

    #[error("requested subspace dimension {requested} exceeds constraint rank {rank}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("eigen solve did not converge (relative residual {residual:e})")]
    Unconverged { residual: f64 },

    #[error("eigen solve failed at iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<EgdaError>,
    },

    #[error("projection matrix is all zero; importance is undefined")]
    ZeroProjection,

    #[error("layout mismatch: {0}")]
    Layout(String),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl EgdaError {
    /// True for failures of the numerical core rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            EgdaError::SingularConstraint { .. }
            | EgdaError::RankDeficient { .. }
            | EgdaError::Unconverged { .. } => true,
            EgdaError::Iteration { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EgdaError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        EgdaError::ShapeMismatch {
            op,
            detail: detail.into(),
        }
    }
}
