use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cell has no positive-weight samples")]
    EmptyCell,

    #[error("packing stopped after {achieved} of {target} fibres in layer {layer}")]
    PartialPacking {
        layer: usize,
        achieved: usize,
        target: usize,
    },

    #[error("statistic undefined: {0}")]
    UndefinedStatistic(String),

    #[error("no critical value found below alpha = {alpha} within {iterations} doublings")]
    NoCriticalValue { alpha: f64, iterations: usize },

    #[error("field has zero variance")]
    DegenerateField,

    #[error("estimation failed: {0}")]
    EstimationFailed(String),

    #[error("zero nearest-neighbour distance at sample {index}")]
    ZeroDistance { index: usize },

    #[error("only {filtered} samples exceed the penalty radius, need at least 2")]
    DegenerateSample { filtered: usize },

    #[error("mixture component {component} has total weight {weight:e}")]
    DegenerateComponent { component: usize, weight: f64 },

    #[error("SAEM fit degenerated at iteration {iteration}: {reason}")]
    DegenerateFit {
        iteration: usize,
        reason: String,
        last_valid: Option<Box<crate::saem::MixtureParams>>,
    },

    #[error("no admissible label field within {attempts} attempts")]
    SmoothingFailed { attempts: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
