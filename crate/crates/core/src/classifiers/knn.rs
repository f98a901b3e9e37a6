//! K-nearest-neighbor classification with Euclidean distance.

use ndarray::{Array2, ArrayView1};

use super::{argmax_tie_low, ClassifierError};
use crate::data::LabeledDataset;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// Memorized training set plus the neighbor count.
#[derive(Debug, Clone)]
pub struct KnnModel<T> {
    pub train: Array2<T>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub k: usize,
}

/// Store the training data; `k` must be in `1..=N`.
pub fn knn_fit<T: Scalar>(
    data: &LabeledDataset<T>,
    params: &KnnParams,
) -> Result<KnnModel<T>, ClassifierError> {
    let n = data.len();
    if params.k == 0 || params.k > n {
        return Err(ClassifierError::InvalidK { k: params.k, n });
    }
    Ok(KnnModel {
        train: data.matrix.features().clone(),
        labels: data.labels.clone(),
        n_classes: data.n_classes,
        k: params.k,
    })
}

/// Predicted class plus the per-class share of the K nearest neighbors.
///
/// Distance ties break toward the lower training-row index, class ties
/// toward the lower class index.
pub fn knn_predict<T: Scalar>(model: &KnnModel<T>, x: ArrayView1<'_, T>) -> (usize, Vec<T>) {
    assert_eq!(x.len(), model.train.ncols(), "query dimension must match training data");
    let n = model.train.nrows();
    let mut dist: Vec<(T, usize)> = (0..n)
        .map(|i| {
            let mut s = T::zero();
            for (a, b) in model.train.row(i).iter().zip(x.iter()) {
                let d = *a - *b;
                s = s + d * d;
            }
            (s, i)
        })
        .collect();
    dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let mut score = vec![T::zero(); model.n_classes];
    let share = T::one() / T::from_usize(model.k).unwrap();
    for &(_, i) in dist.iter().take(model.k) {
        score[model.labels[i]] = score[model.labels[i]] + share;
    }
    (argmax_tie_low(&score), score)
}
