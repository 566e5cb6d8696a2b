//! Crate-wide error type.
//!
//! Variants are grouped by the stage that raises them: graph validation,
//! data ingestion, model fitting, and the penalty-path search. The CLI maps
//! these onto exit classes (config / data / numeric), so new variants should
//! slot into one of those buckets.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The causal graph contains a cycle; the named edge closes it.
    #[error("cycle in causal graph: edge {from} -> {to} closes a cycle")]
    Cycle { from: String, to: String },

    /// A node lists a parent that is not declared anywhere in the graph.
    #[error("node {node} references unknown parent {parent}")]
    UnknownParent { node: String, parent: String },

    /// A structural-model spec is malformed beyond graph shape
    /// (bad link/family pairing, stray coefficient, missing node, ...).
    #[error("invalid structural model: {0}")]
    Spec(String),

    /// A linear predictor produced an unusable distribution parameter.
    #[error("invalid {family} parameter for node {node} at row {row}: {detail}")]
    InvalidParam {
        node: String,
        family: &'static str,
        row: usize,
        detail: String,
    },

    /// An operation needs more rows than the dataset provides.
    #[error("dataset has {rows} rows but the operation needs at least {min}")]
    TooFewRows { rows: usize, min: usize },

    /// A CSV cell could not be parsed into the declared column kind.
    #[error("parse error at data row {row}, column {column}: {detail}")]
    Parse {
        row: usize,
        column: String,
        detail: String,
    },

    /// Columns, kinds, or roles do not line up with what a model expects.
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    /// Strict recoding hit a raw category with no mapping rule.
    #[error("unmapped category {value:?} in column {column}")]
    UnmappedCategory { column: String, value: String },

    /// A per-group fit is impossible: the group is empty or a column is
    /// constant within it.
    #[error("degenerate protected-attribute group: {0}")]
    DegenerateGroup(String),

    /// The disparity penalty needs both protected-attribute groups present.
    #[error("protected-attribute group {0} is empty")]
    EmptyGroup(String),

    /// The training target contains a single class.
    #[error("target column is single-class; nothing to learn")]
    DegenerateTarget,

    /// AUC is undefined because the labels contain a single class.
    #[error("labels contain a single class; ranking metrics are undefined")]
    SingleClass,

    /// No penalty value on the (refined) grid met the disparity bound.
    #[error(
        "no penalty on the grid met the disparity bound; best disparity {best:.6} at lambda {lambda}"
    )]
    GridExhausted { lambda: f64, best: f64 },

    /// A curve has too few points for a direction call.
    #[error("need at least {min} curve points, got {got}")]
    TooFewPoints { got: usize, min: usize },

    /// A config field failed validation.
    #[error("invalid config: {field}: {detail}")]
    Config { field: String, detail: String },

    /// Filesystem failure, annotated with the path involved.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// CSV-level failure not tied to a single cell.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Exit class used by the CLI: 2 = config, 3 = data, 4 = numeric.
    pub fn exit_class(&self) -> i32 {
        use Error::*;
        match self {
            Config { .. } | Spec(_) | Json(_) => 2,
            Cycle { .. } | UnknownParent { .. } | TooFewRows { .. } | Parse { .. }
            | SchemaMismatch(_) | UnmappedCategory { .. } | Io { .. } | Csv(_) => 3,
            InvalidParam { .. } | DegenerateGroup(_) | EmptyGroup(_) | DegenerateTarget
            | SingleClass | GridExhausted { .. } | TooFewPoints { .. } => 4,
        }
    }

    /// Short machine-readable tag for structured error output.
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            Cycle { .. } => "cycle",
            UnknownParent { .. } => "unknown_parent",
            Spec(_) => "spec",
            InvalidParam { .. } => "invalid_param",
            TooFewRows { .. } => "too_few_rows",
            Parse { .. } => "parse",
            SchemaMismatch(_) => "schema_mismatch",
            UnmappedCategory { .. } => "unmapped_category",
            DegenerateGroup(_) => "degenerate_group",
            EmptyGroup(_) => "empty_group",
            DegenerateTarget => "degenerate_target",
            SingleClass => "single_class",
            GridExhausted { .. } => "grid_exhausted",
            TooFewPoints { .. } => "too_few_points",
            Config { .. } => "config",
            Io { .. } => "io",
            Json(_) => "json",
            Csv(_) => "csv",
        }
    }
}

pub(crate) fn io_err(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Error {
    Error::Io {
        path: path.as_ref().display().to_string(),
        source,
    }
}
