//! Stratified hold-out splitting and k-fold cross-validation.

use rand::seq::SliceRandom;

use super::metrics::{accuracy, cohen_kappa, confusion};
use super::EvalError;
use crate::classifiers::{train, ClassifierSpec};
use crate::data::LabeledDataset;
use crate::rng::{derive_seed, stream_rng};
use crate::scalar::Scalar;

fn class_indices(labels: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut per_class = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        per_class[l].push(i);
    }
    per_class
}

fn check_min_class_size(per_class: &[Vec<usize>]) -> Result<(), EvalError> {
    for (class, members) in per_class.iter().enumerate() {
        if members.len() < 2 {
            return Err(EvalError::ClassTooSmall { class, count: members.len() });
        }
    }
    Ok(())
}

/// Class-proportional train/test split, deterministic given `seed`.
///
/// Each class contributes `round(n_c · fraction)` test rows, clamped so
/// both sides keep at least one member of every class.
pub fn stratified_split<T: Scalar>(
    data: &LabeledDataset<T>,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset<T>, LabeledDataset<T>), EvalError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(EvalError::InvalidTestFraction(test_fraction));
    }
    let per_class = class_indices(&data.labels, data.n_classes);
    check_min_class_size(&per_class)?;

    let mut test_idx = Vec::new();
    let mut train_idx = Vec::new();
    for (class, members) in per_class.iter().enumerate() {
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut stream_rng(seed, class as u64));
        let n_c = shuffled.len();
        let n_test = ((n_c as f64 * test_fraction).round() as usize).clamp(1, n_c - 1);
        test_idx.extend_from_slice(&shuffled[..n_test]);
        train_idx.extend_from_slice(&shuffled[n_test..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((data.select(&train_idx), data.select(&test_idx)))
}

/// Stratified fold assignment: per class, a seeded shuffle dealt
/// round-robin, with the starting fold rotating between classes so fold
/// sizes stay balanced. Folds are returned as sorted index lists.
pub fn stratified_folds(
    labels: &[usize],
    n_classes: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidFolds(format!("k must be >= 2, got {k}")));
    }
    if labels.len() < k {
        return Err(EvalError::InvalidFolds(format!(
            "{} points cannot fill {k} folds",
            labels.len()
        )));
    }
    let per_class = class_indices(labels, n_classes);
    check_min_class_size(&per_class)?;

    let mut folds = vec![Vec::new(); k];
    let mut start = 0usize;
    for (class, members) in per_class.iter().enumerate() {
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut stream_rng(seed, class as u64));
        for (j, &idx) in shuffled.iter().enumerate() {
            folds[(start + j) % k].push(idx);
        }
        start = (start + shuffled.len()) % k;
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

/// Selection metric for cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CvMetric {
    #[default]
    Accuracy,
    Kappa,
}

impl std::str::FromStr for CvMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "accuracy" => Ok(CvMetric::Accuracy),
            "kappa" => Ok(CvMetric::Kappa),
            other => Err(format!("unknown CV metric `{other}`")),
        }
    }
}

/// Outcome of a grid search.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub best_index: usize,
    pub best_spec: ClassifierSpec,
    /// Mean validation score of the winning grid point.
    pub best_score: f64,
    /// Mean validation score per grid point; `None` where every fold
    /// failed to train.
    pub scores: Vec<Option<f64>>,
}

/// Stratified k-fold grid search. Returns the grid point with the best
/// mean validation score, ties to the first in grid order.
///
/// Grid points whose training fails on a fold (for example boosting with
/// no useful first stage) are skipped; at least one must survive.
pub fn kfold_cv<T: Scalar>(
    data: &LabeledDataset<T>,
    grid: &[ClassifierSpec],
    k: usize,
    seed: u64,
    metric: CvMetric,
) -> Result<CvOutcome, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::InvalidFolds("empty hyperparameter grid".into()));
    }
    let folds = stratified_folds(&data.labels, data.n_classes, k, seed)?;
    let all: Vec<usize> = (0..data.len()).collect();

    let mut scores: Vec<Option<f64>> = Vec::with_capacity(grid.len());
    let mut first_error: Option<crate::classifiers::ClassifierError> = None;
    for (g, spec) in grid.iter().enumerate() {
        let mut fold_scores = Vec::with_capacity(k);
        let mut failed = false;
        for (f, fold) in folds.iter().enumerate() {
            let train_idx: Vec<usize> =
                all.iter().copied().filter(|i| !fold.contains(i)).collect();
            let train_ds = data.select(&train_idx);
            let validate_ds = data.select(fold);
            let fit_seed = derive_seed(seed, (g * k + f) as u64);
            let model = match train(spec, &train_ds, fit_seed) {
                Ok(m) => m,
                Err(e) => {
                    if first_error.is_none() {
                        first_error = Some(e);
                    }
                    failed = true;
                    break;
                }
            };
            let predicted: Vec<usize> = (0..validate_ds.len())
                .map(|i| model.predict(validate_ds.matrix.row(i)))
                .collect();
            let cm = confusion(&predicted, &validate_ds.labels, data.n_classes)?;
            fold_scores.push(match metric {
                CvMetric::Accuracy => accuracy(&cm),
                CvMetric::Kappa => cohen_kappa(&cm),
            });
        }
        if failed {
            scores.push(None);
        } else {
            scores.push(Some(fold_scores.iter().sum::<f64>() / fold_scores.len() as f64));
        }
    }

    let mut best: Option<usize> = None;
    for (g, score) in scores.iter().enumerate() {
        if let Some(s) = score {
            if best.map_or(true, |b| *s > scores[b].unwrap()) {
                best = Some(g);
            }
        }
    }
    match best {
        Some(g) => Ok(CvOutcome {
            best_index: g,
            best_spec: grid[g].clone(),
            best_score: scores[g].unwrap(),
            scores,
        }),
        None => Err(EvalError::AllGridPointsFailed(first_error.expect("a failure was recorded"))),
    }
}
