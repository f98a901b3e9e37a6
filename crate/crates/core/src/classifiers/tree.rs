//! Greedy CART trees with weighted Gini impurity.
//!
//! At each node `mtry` candidate features are sampled without replacement
//! and every boundary between consecutive distinct values is scored; the
//! split with the greatest impurity decrease wins, ties going to the
//! lowest feature index and then the lowest threshold. `min_node` is the
//! minimum number of observations a terminal node may hold, so splits
//! that would leave a smaller child are not considered.

use ndarray::ArrayView1;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::argmax_tie_low;
use crate::data::LabeledDataset;
use crate::scalar::Scalar;

/// Decision tree node: an axis-aligned split or a leaf holding weighted
/// class counts.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode<T> {
    Split { feature: usize, threshold: T, left: Box<TreeNode<T>>, right: Box<TreeNode<T>> },
    Leaf { counts: Vec<T> },
}

impl<T> TreeNode<T> {
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    /// Features sampled per node.
    pub mtry: usize,
    /// Minimum observations in a terminal node.
    pub min_node: usize,
    /// Maximum depth, `None` for unlimited.
    pub max_depth: Option<usize>,
}

/// Weighted Gini impurity `1 - Σ (w_c / W)²`.
fn gini<T: Scalar>(counts: &[T], total: T) -> T {
    let mut s = T::zero();
    for c in counts {
        let p = *c / total;
        s = s + p * p;
    }
    T::one() - s
}

struct Best<T> {
    decrease: T,
    feature: usize,
    threshold: T,
}

/// Fit a tree on the weighted dataset. `weights` must be non-negative and
/// not all zero; `rng` drives the per-node feature sampling.
pub fn tree_fit<T: Scalar>(
    data: &LabeledDataset<T>,
    weights: &[T],
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> TreeNode<T> {
    assert_eq!(weights.len(), data.len(), "one weight per observation");
    assert!(weights.iter().all(|w| *w >= T::zero()), "weights must be >= 0");
    assert!(weights.iter().any(|w| *w > T::zero()), "weights must not all be zero");
    assert!(params.mtry >= 1 && params.mtry <= data.matrix.n_features());
    let indices: Vec<usize> = (0..data.len()).collect();
    grow(data, weights, indices, 0, params, rng)
}

fn leaf_counts<T: Scalar>(data: &LabeledDataset<T>, weights: &[T], indices: &[usize]) -> Vec<T> {
    let mut counts = vec![T::zero(); data.n_classes];
    for &i in indices {
        counts[data.labels[i]] = counts[data.labels[i]] + weights[i];
    }
    counts
}

fn grow<T: Scalar>(
    data: &LabeledDataset<T>,
    weights: &[T],
    indices: Vec<usize>,
    depth: usize,
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> TreeNode<T> {
    let counts = leaf_counts(data, weights, &indices);
    let total: T = counts.iter().copied().sum();

    let pure = data.labels[indices[0]] == data.labels[indices[indices.len() - 1]]
        && indices.iter().all(|&i| data.labels[i] == data.labels[indices[0]]);
    let depth_capped = params.max_depth.is_some_and(|d| depth >= d);
    if pure || depth_capped || indices.len() < params.min_node || total <= T::zero() {
        return TreeNode::Leaf { counts };
    }

    let mut candidates = sample_features(data.matrix.n_features(), params.mtry, rng);
    candidates.sort_unstable();

    let parent_gini = gini(&counts, total);
    let mut best: Option<Best<T>> = None;
    let mut sorted: Vec<(T, usize)> = Vec::with_capacity(indices.len());
    let mut left_counts = vec![T::zero(); data.n_classes];
    for &feature in &candidates {
        sorted.clear();
        sorted.extend(indices.iter().map(|&i| (data.matrix.features()[[i, feature]], i)));
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

        left_counts.iter_mut().for_each(|c| *c = T::zero());
        let mut left_weight = T::zero();
        for pos in 0..sorted.len() - 1 {
            let (value, idx) = sorted[pos];
            left_counts[data.labels[idx]] = left_counts[data.labels[idx]] + weights[idx];
            left_weight = left_weight + weights[idx];
            if value == sorted[pos + 1].0 {
                continue; // no boundary between equal values
            }
            let n_left = pos + 1;
            let n_right = sorted.len() - n_left;
            if n_left < params.min_node || n_right < params.min_node {
                continue;
            }
            let right_weight = total - left_weight;
            if left_weight <= T::zero() || right_weight <= T::zero() {
                continue;
            }
            let right_counts: Vec<T> =
                counts.iter().zip(&left_counts).map(|(t, l)| *t - *l).collect();
            let children = (left_weight * gini(&left_counts, left_weight)
                + right_weight * gini(&right_counts, right_weight))
                / total;
            let decrease = parent_gini - children;
            let improves = match &best {
                None => decrease > T::zero(),
                Some(b) => decrease > b.decrease,
            };
            if improves {
                let threshold = (value + sorted[pos + 1].0) / T::of(2.0);
                best = Some(Best { decrease, feature, threshold });
            }
        }
    }

    match best {
        None => TreeNode::Leaf { counts },
        Some(b) => {
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                .iter()
                .partition(|&&i| data.matrix.features()[[i, b.feature]] <= b.threshold);
            let left = grow(data, weights, left_idx, depth + 1, params, rng);
            let right = grow(data, weights, right_idx, depth + 1, params, rng);
            TreeNode::Split {
                feature: b.feature,
                threshold: b.threshold,
                left: Box::new(left),
                right: Box::new(right),
            }
        }
    }
}

/// Partial Fisher-Yates draw of `mtry` distinct feature indices.
fn sample_features(d: usize, mtry: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..d).collect();
    for i in 0..mtry {
        let j = rng.gen_range(i..d);
        pool.swap(i, j);
    }
    pool.truncate(mtry);
    pool
}

/// Route a point to its leaf; returns the argmax class (ties low) and the
/// leaf's weighted class counts.
pub fn tree_predict<'a, T: Scalar>(
    tree: &'a TreeNode<T>,
    x: ArrayView1<'_, T>,
) -> (usize, &'a [T]) {
    let mut node = tree;
    loop {
        match node {
            TreeNode::Leaf { counts } => return (argmax_tie_low(counts), counts),
            TreeNode::Split { feature, threshold, left, right } => {
                node = if x[*feature] <= *threshold { left } else { right };
            }
        }
    }
}

/// Weighted share of training observations the tree misclassifies.
pub fn tree_training_error<T: Scalar>(
    tree: &TreeNode<T>,
    data: &LabeledDataset<T>,
    weights: &[T],
) -> T {
    let mut wrong = T::zero();
    let mut total = T::zero();
    for i in 0..data.len() {
        total = total + weights[i];
        let (class, _) = tree_predict(tree, data.matrix.row(i));
        if class != data.labels[i] {
            wrong = wrong + weights[i];
        }
    }
    wrong / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::testutil::dataset;
    use rand_chacha::rand_core::SeedableRng;

    fn unit_weights(n: usize) -> Vec<f64> {
        vec![1.0; n]
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn pure_dataset_gives_single_leaf() {
        let data = dataset(vec![vec![0.0], vec![1.0], vec![2.0]], vec![1, 1, 1], 2);
        let tree = tree_fit(
            &data,
            &unit_weights(3),
            &TreeParams { mtry: 1, min_node: 1, max_depth: None },
            &mut rng(0),
        );
        assert_eq!(tree.depth(), 0);
        assert!(matches!(tree, TreeNode::Leaf { .. }));
    }

    #[test]
    fn separable_1d_split_lands_between_groups() {
        let data = dataset(
            vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]],
            vec![0, 0, 1, 1],
            2,
        );
        let tree = tree_fit(
            &data,
            &unit_weights(4),
            &TreeParams { mtry: 1, min_node: 1, max_depth: None },
            &mut rng(1),
        );
        match &tree {
            TreeNode::Split { feature, threshold, left, right } => {
                assert_eq!(*feature, 0);
                assert!(*threshold > 1.0 && *threshold < 10.0, "threshold {threshold}");
                assert!(matches!(**left, TreeNode::Leaf { .. }));
                assert!(matches!(**right, TreeNode::Leaf { .. }));
            }
            TreeNode::Leaf { .. } => panic!("expected a split"),
        }
        for i in 0..4 {
            let (class, _) = tree_predict(&tree, data.matrix.row(i));
            assert_eq!(class, data.labels[i]);
        }
    }

    #[test]
    fn min_node_equal_n_gives_single_leaf_with_full_counts() {
        let data = dataset(
            vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]],
            vec![0, 0, 1, 1],
            2,
        );
        let tree = tree_fit(
            &data,
            &unit_weights(4),
            &TreeParams { mtry: 1, min_node: 4, max_depth: None },
            &mut rng(1),
        );
        match tree {
            TreeNode::Leaf { counts } => assert_eq!(counts, vec![2.0, 2.0]),
            _ => panic!("expected a leaf"),
        }
    }

    #[test]
    fn max_depth_zero_is_a_stump_root() {
        let data = dataset(
            vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]],
            vec![0, 0, 1, 1],
            2,
        );
        let tree = tree_fit(
            &data,
            &unit_weights(4),
            &TreeParams { mtry: 1, min_node: 1, max_depth: Some(0) },
            &mut rng(1),
        );
        assert_eq!(tree.depth(), 0);
    }

    #[test]
    fn training_error_non_increasing_in_depth() {
        // mtry = D makes the greedy splits deterministic, so a deeper tree
        // refines the shallower one.
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 13) as f64, ((i * 7) % 11) as f64])
            .collect();
        let labels: Vec<usize> = (0..40).map(|i| (i * 3 + i / 5) % 3).collect();
        let data = dataset(rows, labels, 3);
        let w = unit_weights(40);
        let mut prev = f64::INFINITY;
        for depth in 0..8 {
            let tree = tree_fit(
                &data,
                &w,
                &TreeParams { mtry: 2, min_node: 1, max_depth: Some(depth) },
                &mut rng(3),
            );
            let err = tree_training_error(&tree, &data, &w);
            assert!(
                err <= prev + 1e-12,
                "training error rose from {prev} to {err} at depth {depth}"
            );
            prev = err;
        }
    }

    #[test]
    fn weighted_points_dominate_splits() {
        // one heavy mislabeled point outweighs three light ones
        let data = dataset(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]], vec![0, 0, 0, 1], 2);
        let weights = vec![0.1, 0.1, 0.1, 10.0];
        let tree = tree_fit(
            &data,
            &weights,
            &TreeParams { mtry: 1, min_node: 1, max_depth: Some(1) },
            &mut rng(5),
        );
        let (class, _) = tree_predict(&tree, data.matrix.row(3));
        assert_eq!(class, 1);
    }

    #[test]
    fn identical_features_cannot_split() {
        let data = dataset(vec![vec![1.0], vec![1.0], vec![1.0]], vec![0, 1, 0], 2);
        let tree = tree_fit(
            &data,
            &unit_weights(3),
            &TreeParams { mtry: 1, min_node: 1, max_depth: None },
            &mut rng(7),
        );
        match tree {
            TreeNode::Leaf { counts } => assert_eq!(counts, vec![2.0, 1.0]),
            _ => panic!("no split possible on constant features"),
        }
    }

    #[test]
    fn worked_stump_breaks_gini_tie_toward_low_class() {
        // y = [1,1,0,1]: the best stump splits at 1.5; its right leaf ties
        // (one 0, one 1) and must predict class 0.
        let data = dataset(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]], vec![1, 1, 0, 1], 2);
        let tree = tree_fit(
            &data,
            &unit_weights(4),
            &TreeParams { mtry: 1, min_node: 1, max_depth: Some(1) },
            &mut rng(11),
        );
        match &tree {
            TreeNode::Split { threshold, .. } => assert_eq!(*threshold, 1.5),
            _ => panic!("expected a stump"),
        }
        let preds: Vec<usize> =
            (0..4).map(|i| tree_predict(&tree, data.matrix.row(i)).0).collect();
        assert_eq!(preds, vec![1, 1, 0, 0]); // misclassifies exactly index 3
    }
}
