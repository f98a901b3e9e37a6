//! SAMME multi-class boosting over depth-limited CART trees.
//!
//! Observation weights start at 1/N. Each round fits a weighted tree on
//! all features, computes the weighted misclassification rate `e_f`, and
//! scales the misclassified weights by `exp(γ_f)` with
//! `γ_f = rate · [ln((1-e_f)/e_f) + ln(H-1)]`. A round with
//! `e_f ≥ 1 - 1/H` is discarded and boosting stops; a perfect round is
//! kept and stops.

use ndarray::ArrayView1;
use rand_chacha::ChaCha8Rng;

use super::tree::{tree_fit, tree_predict, TreeNode, TreeParams};
use super::{argmax_tie_low, ClassifierError};
use crate::data::LabeledDataset;
use crate::rng::stream_rng;
use crate::scalar::Scalar;

/// Error floor standing in for e_f = 0 in the stage-weight formula, so a
/// perfect stage gets a large finite weight.
const PERFECT_STAGE_ERROR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostParams {
    /// Maximum boosting rounds.
    pub rounds: usize,
    /// Depth cap for each stage tree.
    pub max_depth: usize,
    pub learning_rate: f64,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self { rounds: 200, max_depth: 3, learning_rate: 0.1 }
    }
}

/// One kept boosting stage.
#[derive(Debug, Clone)]
pub struct BoostStage<T> {
    pub tree: TreeNode<T>,
    /// Stage weight γ_f.
    pub alpha: T,
    /// Weighted error e_f the stage achieved under its training weights.
    pub error: T,
}

#[derive(Debug, Clone)]
pub struct BoostModel<T> {
    pub stages: Vec<BoostStage<T>>,
    pub n_classes: usize,
    pub n_features: usize,
    pub learning_rate: T,
    pub seed: u64,
}

/// Result of one boosting round.
#[derive(Debug, Clone)]
pub enum StepOutcome<T> {
    /// Stage kept; `stop` is set when the stage was perfect (e_f = 0).
    Kept { stage: BoostStage<T>, new_weights: Vec<T>, stop: bool },
    /// Stage no better than chance (e_f ≥ 1 − 1/H); boosting must stop.
    Rejected { error: T },
}

/// One SAMME round: fit a weighted tree on all features, score it, and
/// reweight. `weights` must sum to 1.
pub fn samme_step<T: Scalar>(
    data: &LabeledDataset<T>,
    weights: &[T],
    max_depth: usize,
    learning_rate: T,
    rng: &mut ChaCha8Rng,
) -> StepOutcome<T> {
    let d = data.matrix.n_features();
    let h = data.n_classes;
    let params = TreeParams { mtry: d, min_node: 1, max_depth: Some(max_depth) };
    let tree = tree_fit(data, weights, &params, rng);

    let mut error = T::zero();
    let mut total = T::zero();
    let mut wrong = vec![false; data.len()];
    for i in 0..data.len() {
        total = total + weights[i];
        let (class, _) = tree_predict(&tree, data.matrix.row(i));
        if class != data.labels[i] {
            error = error + weights[i];
            wrong[i] = true;
        }
    }
    let error = error / total;

    let chance = T::one() - T::one() / T::from_usize(h).unwrap();
    if error >= chance {
        return StepOutcome::Rejected { error };
    }

    let perfect = error == T::zero();
    let e = if perfect { T::of(PERFECT_STAGE_ERROR) } else { error };
    let alpha = learning_rate
        * (((T::one() - e) / e).ln() + T::from_usize(h - 1).unwrap().ln());

    let mut new_weights: Vec<T> = weights.to_vec();
    if !perfect {
        let factor = alpha.exp();
        for (w, &bad) in new_weights.iter_mut().zip(&wrong) {
            if bad {
                *w = *w * factor;
            }
        }
    }
    let sum: T = new_weights.iter().copied().sum();
    for w in &mut new_weights {
        *w = *w / sum;
    }

    StepOutcome::Kept { stage: BoostStage { tree, alpha, error }, new_weights, stop: perfect }
}

/// Fit up to `rounds` stages. Errors with [`ClassifierError::NoUsefulStage`]
/// if the very first stage is already no better than chance.
pub fn boost_fit<T: Scalar>(
    data: &LabeledDataset<T>,
    params: &BoostParams,
    seed: u64,
) -> Result<BoostModel<T>, ClassifierError> {
    if params.rounds == 0 {
        return Err(ClassifierError::InvalidParams("boosting needs at least one round".into()));
    }
    if !(params.learning_rate > 0.0) {
        return Err(ClassifierError::InvalidParams("learning rate must be > 0".into()));
    }
    let n = data.len();
    let rate = T::of(params.learning_rate);
    let mut weights = vec![T::one() / T::from_usize(n).unwrap(); n];
    let mut stages = Vec::new();
    for f in 0..params.rounds {
        let mut rng = stream_rng(seed, f as u64);
        match samme_step(data, &weights, params.max_depth, rate, &mut rng) {
            StepOutcome::Rejected { .. } => {
                if stages.is_empty() {
                    return Err(ClassifierError::NoUsefulStage);
                }
                break;
            }
            StepOutcome::Kept { stage, new_weights, stop } => {
                stages.push(stage);
                weights = new_weights;
                if stop {
                    break;
                }
            }
        }
    }
    Ok(BoostModel {
        stages,
        n_classes: data.n_classes,
        n_features: data.matrix.n_features(),
        learning_rate: rate,
        seed,
    })
}

/// Class with the largest `Σ_f γ_f · 1[G_f(x) = class]`; ties go to the
/// lower class index. The score vector holds the per-class γ sums.
pub fn boost_predict<T: Scalar>(model: &BoostModel<T>, x: ArrayView1<'_, T>) -> (usize, Vec<T>) {
    let mut scores = vec![T::zero(); model.n_classes];
    for stage in &model.stages {
        let (class, _) = tree_predict(&stage.tree, x);
        scores[class] = scores[class] + stage.alpha;
    }
    (argmax_tie_low(&scores), scores)
}
