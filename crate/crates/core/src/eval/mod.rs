//! Evaluation: metrics, stratified splitting, cross-validation and report
//! assembly.

mod metrics;
mod report;
mod split;

use thiserror::Error;

pub use metrics::{
    accuracy, adjusted_rand_index, cohen_kappa, cohen_kappa_flagged, confusion, per_class_recall,
    ConfusionMatrix,
};
pub use report::{cluster_profiles, evaluate_model, segment_shares, ClusterProfile, EvalReport, SegmentShare};
pub use split::{kfold_cv, stratified_folds, stratified_split, CvMetric, CvOutcome};

use crate::classifiers::ClassifierError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("class {class} has only {count} members, need at least 2")]
    ClassTooSmall { class: usize, count: usize },
    #[error("test fraction must be in (0,1), got {0}")]
    InvalidTestFraction(f64),
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("invalid cross-validation setup: {0}")]
    InvalidFolds(String),
    #[error("every grid point failed; first error: {0}")]
    AllGridPointsFailed(ClassifierError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}
