use std::path::PathBuf;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema error: missing mandatory column `{column}`")]
    Schema { column: String },

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("degenerate team `{team}`: {reason}")]
    DegenerateTeam { team: String, reason: String },

    #[error("degenerate neighbours: both reference teams scored {goals} goals")]
    DegenerateNeighbor { goals: f64 },

    #[error("classification error: {0}")]
    Classification(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("spec error: {0}")]
    Spec(String),

    #[error("input error: missing feature `{0}`")]
    MissingFeature(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad input layout or configuration rather
    /// than by a runtime failure. The CLI maps these to exit code 2.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Schema { .. } | Error::Config(_) | Error::Argument(_) | Error::Spec(_) => true,
            Error::Stage { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}
