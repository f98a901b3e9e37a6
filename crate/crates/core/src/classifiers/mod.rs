//! Multi-class classifiers predicting cluster membership from profile
//! features: KNN, CART trees, random forest, and SAMME boosting.
//!
//! Every tie — neighbor distance, vote, argmax, split choice — breaks
//! toward the lowest index, so predictions are fully deterministic.

mod boost;
mod forest;
mod io;
mod knn;
mod tree;

use thiserror::Error;

use crate::data::LabeledDataset;
use crate::scalar::Scalar;

pub use boost::{boost_fit, boost_predict, samme_step, BoostModel, BoostParams, BoostStage, StepOutcome};
pub use forest::{forest_fit, forest_predict, oob_error, ForestModel, ForestParams};
pub use io::{load_model, read_model_from, save_model, write_model_to};
pub use knn::{knn_fit, knn_predict, KnnModel, KnnParams};
pub use tree::{tree_fit, tree_predict, tree_training_error, TreeNode, TreeParams};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("k must be in 1..={n}, got {k}")]
    InvalidK { k: usize, n: usize },
    #[error("first boosting stage is no better than chance")]
    NoUsefulStage,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: model expects {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("model file line {line}: {reason}")]
    ParseModel { line: usize, reason: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Classifier family plus hyperparameters, as selected by CV.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierSpec {
    Knn(KnnParams),
    Forest(ForestParams),
    Boost(BoostParams),
}

impl ClassifierSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ClassifierSpec::Knn(_) => "knn",
            ClassifierSpec::Forest(_) => "forest",
            ClassifierSpec::Boost(_) => "boost",
        }
    }
}

impl std::fmt::Display for ClassifierSpec {
    // no commas here: the rendering is embedded in CSV artifacts
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClassifierSpec::Knn(p) => write!(f, "knn(k={})", p.k),
            ClassifierSpec::Forest(p) => {
                write!(f, "forest(trees={};mtry=", p.n_trees)?;
                match p.mtry {
                    Some(m) => write!(f, "{m}")?,
                    None => write!(f, "sqrt")?,
                }
                write!(f, ";min_node={})", p.min_node)
            }
            ClassifierSpec::Boost(p) => write!(
                f,
                "boost(rounds={};depth={};rate={})",
                p.rounds, p.max_depth, p.learning_rate
            ),
        }
    }
}

/// A fitted classifier of any family.
#[derive(Debug, Clone)]
pub enum TrainedModel<T> {
    Knn(KnnModel<T>),
    Forest(ForestModel<T>),
    Boost(BoostModel<T>),
}

impl<T: Scalar> TrainedModel<T> {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TrainedModel::Knn(_) => "knn",
            TrainedModel::Forest(_) => "forest",
            TrainedModel::Boost(_) => "boost",
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            TrainedModel::Knn(m) => m.n_classes,
            TrainedModel::Forest(m) => m.n_classes,
            TrainedModel::Boost(m) => m.n_classes,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Knn(m) => m.train.ncols(),
            TrainedModel::Forest(m) => m.n_features,
            TrainedModel::Boost(m) => m.n_features,
        }
    }

    /// Predicted class and the per-class score vector (neighbor shares,
    /// vote shares, or stage-weight sums).
    pub fn predict_scores(&self, x: ndarray::ArrayView1<'_, T>) -> (usize, Vec<T>) {
        match self {
            TrainedModel::Knn(m) => knn_predict(m, x),
            TrainedModel::Forest(m) => forest_predict(m, x),
            TrainedModel::Boost(m) => boost_predict(m, x),
        }
    }

    pub fn predict(&self, x: ndarray::ArrayView1<'_, T>) -> usize {
        self.predict_scores(x).0
    }
}

/// Train the classifier described by `spec`.
pub fn train<T: Scalar>(
    spec: &ClassifierSpec,
    data: &LabeledDataset<T>,
    seed: u64,
) -> Result<TrainedModel<T>, ClassifierError> {
    match spec {
        ClassifierSpec::Knn(p) => Ok(TrainedModel::Knn(knn_fit(data, p)?)),
        ClassifierSpec::Forest(p) => Ok(TrainedModel::Forest(forest_fit(data, p, seed)?)),
        ClassifierSpec::Boost(p) => Ok(TrainedModel::Boost(boost_fit(data, p, seed)?)),
    }
}

/// Argmax with ties toward the lower index.
pub(crate) fn argmax_tie_low<T: PartialOrd>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}
