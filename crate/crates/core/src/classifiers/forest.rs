//! Random forest: bootstrapped CART trees with feature subsampling and
//! majority vote.

use ndarray::ArrayView1;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::tree::{tree_fit, tree_predict, TreeNode, TreeParams};
use super::{argmax_tie_low, ClassifierError};
use crate::data::LabeledDataset;
use crate::rng::stream_rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features sampled per split; `None` uses ⌊√D⌋.
    pub mtry: Option<usize>,
    pub min_node: usize,
    pub max_depth: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { n_trees: 500, mtry: None, min_node: 5, max_depth: None }
    }
}

#[derive(Debug, Clone)]
pub struct ForestModel<T> {
    pub trees: Vec<TreeNode<T>>,
    /// Rows left out of each tree's bootstrap sample.
    pub oob_indices: Vec<Vec<usize>>,
    pub n_classes: usize,
    pub n_features: usize,
    pub mtry: usize,
    pub min_node: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

pub(crate) fn resolve_mtry(mtry: Option<usize>, d: usize) -> usize {
    mtry.unwrap_or_else(|| (d as f64).sqrt().floor() as usize).clamp(1, d)
}

/// Fit `n_trees` trees, each on an N-sized bootstrap resample drawn from a
/// per-tree generator, recording the out-of-bag rows.
pub fn forest_fit<T: Scalar>(
    data: &LabeledDataset<T>,
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel<T>, ClassifierError> {
    forest_fit_with_sampler(data, params, seed, |rng, n| {
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    })
}

/// Forest fitting with a custom bootstrap function (tests substitute the
/// identity sample).
pub(crate) fn forest_fit_with_sampler<T: Scalar>(
    data: &LabeledDataset<T>,
    params: &ForestParams,
    seed: u64,
    sample: impl Fn(&mut ChaCha8Rng, usize) -> Vec<usize>,
) -> Result<ForestModel<T>, ClassifierError> {
    if params.n_trees == 0 {
        return Err(ClassifierError::InvalidParams("forest needs at least one tree".into()));
    }
    let n = data.len();
    let d = data.matrix.n_features();
    let mtry = resolve_mtry(params.mtry, d);
    let tree_params = TreeParams { mtry, min_node: params.min_node, max_depth: params.max_depth };

    let mut trees = Vec::with_capacity(params.n_trees);
    let mut oob_indices = Vec::with_capacity(params.n_trees);
    for b in 0..params.n_trees {
        let mut rng = stream_rng(seed, b as u64);
        let bag = sample(&mut rng, n);
        let mut in_bag = vec![false; n];
        for &i in &bag {
            in_bag[i] = true;
        }
        let oob: Vec<usize> = (0..n).filter(|&i| !in_bag[i]).collect();
        let boot = data.select(&bag);
        let weights = vec![T::one(); bag.len()];
        trees.push(tree_fit(&boot, &weights, &tree_params, &mut rng));
        oob_indices.push(oob);
    }
    Ok(ForestModel {
        trees,
        oob_indices,
        n_classes: data.n_classes,
        n_features: d,
        mtry,
        min_node: params.min_node,
        max_depth: params.max_depth,
        seed,
    })
}

/// Majority vote over the trees; the score vector is the normalized vote
/// count per class. Vote ties break toward the lower class index.
pub fn forest_predict<T: Scalar>(model: &ForestModel<T>, x: ArrayView1<'_, T>) -> (usize, Vec<T>) {
    let mut votes = vec![0usize; model.n_classes];
    for tree in &model.trees {
        let (class, _) = tree_predict(tree, x);
        votes[class] += 1;
    }
    let b = T::from_usize(model.trees.len()).unwrap();
    let shares: Vec<T> = votes.iter().map(|&v| T::from_usize(v).unwrap() / b).collect();
    (argmax_tie_low(&shares), shares)
}

/// Out-of-bag error: every row is predicted by majority vote over the
/// trees whose bootstrap missed it; rows seen by every tree are skipped.
pub fn oob_error<T: Scalar>(model: &ForestModel<T>, data: &LabeledDataset<T>) -> f64 {
    let n = data.len();
    let mut votes = vec![vec![0usize; model.n_classes]; n];
    let mut has_vote = vec![false; n];
    for (tree, oob) in model.trees.iter().zip(&model.oob_indices) {
        for &i in oob {
            let (class, _) = tree_predict(tree, data.matrix.row(i));
            votes[i][class] += 1;
            has_vote[i] = true;
        }
    }
    let mut wrong = 0usize;
    let mut considered = 0usize;
    for i in 0..n {
        if !has_vote[i] {
            continue;
        }
        considered += 1;
        if argmax_tie_low(&votes[i]) != data.labels[i] {
            wrong += 1;
        }
    }
    if considered == 0 {
        return 0.0;
    }
    wrong as f64 / considered as f64
}
