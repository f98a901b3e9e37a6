//! Pipeline driver and subcommand implementations behind the
//! `profilecast` binary.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod pipeline;

use thiserror::Error;

use profilecast_core::classifiers::ClassifierError;
use profilecast_core::data::DataError;
use profilecast_core::eval::EvalError;
use profilecast_core::gmm::GmmError;
use profilecast_core::synth::SynthError;

/// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical
/// failure.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(#[from] DataError),
    #[error("synth: {0}")]
    Synth(#[from] SynthError),
    #[error("gmm: {0}")]
    Gmm(#[from] GmmError),
    #[error("classifier: {0}")]
    Classifier(#[from] ClassifierError),
    #[error("eval: {0}")]
    Eval(#[from] EvalError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("stage {stage}: {source}")]
    Stage { stage: String, source: Box<PipelineError> },
}

impl PipelineError {
    /// Tag an error with the pipeline stage it came from.
    pub fn in_stage(stage: impl Into<String>, err: impl Into<PipelineError>) -> Self {
        PipelineError::Stage { stage: stage.into(), source: Box::new(err.into()) }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Synth(_) => 2,
            PipelineError::Data(_) | PipelineError::Io(_) => 3,
            PipelineError::Gmm(_) | PipelineError::Classifier(_) => 4,
            PipelineError::Eval(e) => match e {
                EvalError::ClassTooSmall { .. } | EvalError::LabelOutOfRange { .. } => 3,
                EvalError::InvalidTestFraction(_) | EvalError::InvalidFolds(_) => 2,
                EvalError::AllGridPointsFailed(_) | EvalError::Classifier(_) => 4,
            },
            PipelineError::Stage { source, .. } => source.exit_code(),
        }
    }
}
