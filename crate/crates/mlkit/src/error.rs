use thiserror::Error;

/// Errors produced by the data-analytics kernel.
#[derive(Debug, Error)]
pub enum MlError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error on {path}: {message}")]
    Csv { path: String, message: String },
    #[error("row {row} has {got} cells, expected {expected}")]
    RaggedRow { row: usize, got: usize, expected: usize },
    #[error("cell at row {row}, column '{column}' does not parse as {expected}: '{value}'")]
    BadCell {
        row: usize,
        column: String,
        expected: String,
        value: String,
    },
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("dataset is empty after applying the missing-value policy")]
    EmptyAfterDrop,
    #[error("series of length {n} too short for window {w} + horizon {h}")]
    SeriesTooShort { n: usize, w: usize, h: usize },
    #[error("hyperparameter '{name}' invalid for {algorithm}: {reason}")]
    BadHyperparam {
        algorithm: String,
        name: String,
        reason: String,
    },
    #[error("linear system is singular even with ridge regularization")]
    SingularSystem,
    #[error("degenerate labels: classification requires at least two classes")]
    DegenerateLabels,
    #[error("algorithm {algorithm} does not support task {task}")]
    TaskMismatch { algorithm: String, task: String },
    #[error("classification with multiple label columns requires every column categorical")]
    MixedLabelKinds,
    #[error("record does not match model schema: {0}")]
    SchemaMismatch(String),
    #[error("prediction/truth length mismatch: {preds} vs {truths}")]
    LengthMismatch { preds: usize, truths: usize },
    #[error("need at least {folds} rows for {folds}-fold cross-validation, got {rows}")]
    TooFewRows { rows: usize, folds: usize },
    #[error("folds must be >= 2, got {0}")]
    BadFoldCount(usize),
    #[error("no applicable algorithm for task {task} with metric {metric}")]
    EmptyGrid { task: String, metric: String },
    #[error("metric '{metric}' is not valid for task {task}")]
    BadMetric { task: String, metric: String },
    #[error("unsupported model file format_version {got}, this build reads {supported}")]
    VersionMismatch { got: u32, supported: u32 },
    #[error("unknown algorithm id '{0}' in model file")]
    UnknownAlgorithm(String),
    #[error("model file is missing required field '{0}'")]
    MalformedModelFile(String),
    #[error("model not trained for this operation: {0}")]
    NotReady(String),
}
