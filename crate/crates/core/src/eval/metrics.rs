//! Confusion matrices, accuracy, Cohen's kappa, and the adjusted Rand
//! index.

use super::EvalError;

/// H×H count matrix, rows = predicted class, columns = observed class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(h: usize) -> Self {
        assert!(h >= 1);
        Self { counts: vec![vec![0; h]; h] }
    }

    /// Build directly from counts (row-major, rows = predicted).
    pub fn from_counts(counts: Vec<Vec<usize>>) -> Self {
        let h = counts.len();
        assert!(h >= 1 && counts.iter().all(|r| r.len() == h), "matrix must be square");
        Self { counts }
    }

    pub fn h(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, predicted: usize, observed: usize) -> usize {
        self.counts[predicted][observed]
    }

    pub fn add(&mut self, predicted: usize, observed: usize) {
        self.counts[predicted][observed] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.h()).map(|c| self.counts[c][c]).sum()
    }

    /// Predicted-class totals.
    pub fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Observed-class totals.
    pub fn col_sums(&self) -> Vec<usize> {
        (0..self.h()).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }
}

/// Tally predicted vs observed labels into an H×H matrix.
pub fn confusion(
    predicted: &[usize],
    observed: &[usize],
    h: usize,
) -> Result<ConfusionMatrix, EvalError> {
    assert_eq!(predicted.len(), observed.len(), "label slices must have equal length");
    let mut cm = ConfusionMatrix::new(h);
    for (&p, &o) in predicted.iter().zip(observed) {
        if p >= h {
            return Err(EvalError::LabelOutOfRange { label: p, n_classes: h });
        }
        if o >= h {
            return Err(EvalError::LabelOutOfRange { label: o, n_classes: h });
        }
        cm.add(p, o);
    }
    Ok(cm)
}

/// Share of agreeing pairs, `trace / total`.
pub fn accuracy(cm: &ConfusionMatrix) -> f64 {
    let total = cm.total();
    assert!(total > 0, "empty confusion matrix");
    cm.trace() as f64 / total as f64
}

/// Cohen's kappa with its degeneracy flag.
///
/// `κ = (p_o − p_e) / (1 − p_e)`. When expected agreement is 1, κ is 1
/// for perfect observed agreement and 0 (flagged) otherwise.
pub fn cohen_kappa_flagged(cm: &ConfusionMatrix) -> (f64, bool) {
    let total = cm.total();
    assert!(total > 0, "empty confusion matrix");
    let n = total as f64;
    let p_o = cm.trace() as f64 / n;
    let p_e: f64 = cm
        .row_sums()
        .iter()
        .zip(&cm.col_sums())
        .map(|(&r, &c)| (r as f64 / n) * (c as f64 / n))
        .sum();
    if p_e >= 1.0 {
        return if p_o >= 1.0 { (1.0, false) } else { (0.0, true) };
    }
    ((p_o - p_e) / (1.0 - p_e), false)
}

/// Cohen's kappa; the degenerate chance-saturated case returns 0.
pub fn cohen_kappa(cm: &ConfusionMatrix) -> f64 {
    cohen_kappa_flagged(cm).0
}

/// Per-observed-class recall; `None` for classes never observed.
pub fn per_class_recall(cm: &ConfusionMatrix) -> Vec<Option<f64>> {
    cm.col_sums()
        .iter()
        .enumerate()
        .map(|(c, &col)| (col > 0).then(|| cm.count(c, c) as f64 / col as f64))
        .collect()
}

fn pairs(n: usize) -> f64 {
    (n as f64) * (n as f64 - 1.0) / 2.0
}

/// Adjusted Rand index between two labelings of the same points.
///
/// 1 for identical partitions, ~0 for independent ones. Returns 1 when
/// the expected and maximum indices coincide (both partitions trivial).
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same points");
    assert!(!a.is_empty(), "labelings must be non-empty");
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut table = vec![vec![0usize; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let sum_cells: f64 = table.iter().flatten().map(|&n| pairs(n)).sum();
    let sum_a: f64 = table.iter().map(|row| pairs(row.iter().sum())).sum();
    let sum_b: f64 = (0..kb)
        .map(|j| pairs(table.iter().map(|row| row[j]).sum()))
        .sum();
    let expected = sum_a * sum_b / pairs(a.len());
    let max_index = 0.5 * (sum_a + sum_b);
    if (max_index - expected).abs() < f64::EPSILON * max_index.max(1.0) {
        return 1.0;
    }
    (sum_cells - expected) / (max_index - expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(counts: Vec<Vec<usize>>) -> ConfusionMatrix {
        ConfusionMatrix::from_counts(counts)
    }

    #[test]
    fn confusion_counts_pairs() {
        // pred [A,A,B], obs [A,B,B]
        let m = confusion(&[0, 0, 1], &[0, 1, 1], 2).unwrap();
        assert_eq!(m.count(0, 0), 1);
        assert_eq!(m.count(0, 1), 1);
        assert_eq!(m.count(1, 1), 1);
        assert_eq!(m.count(1, 0), 0);
        assert_eq!(m.total(), 3);

        // order of pairs does not matter
        let m2 = confusion(&[1, 0, 0], &[1, 1, 0], 2).unwrap();
        assert_eq!(m, m2);

        assert!(matches!(
            confusion(&[2], &[0], 2),
            Err(EvalError::LabelOutOfRange { label: 2, .. })
        ));
    }

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&cm(vec![vec![3, 0], vec![0, 2]])), 1.0);
        assert!((accuracy(&cm(vec![vec![2, 1], vec![1, 2]])) - 4.0 / 6.0).abs() < 1e-15);
        assert_eq!(accuracy(&cm(vec![vec![0, 5], vec![3, 0]])), 0.0);
    }

    #[test]
    fn kappa_hand_values() {
        // perfect diagonal
        assert_eq!(cohen_kappa(&cm(vec![vec![4, 0], vec![0, 6]])), 1.0);
        // worked 2x2: p_o = 2/3, p_e = 1/2 → 1/3
        let k = cohen_kappa(&cm(vec![vec![2, 1], vec![1, 2]]));
        assert!((k - 1.0 / 3.0).abs() < 1e-15);
        // chance-level
        assert_eq!(cohen_kappa(&cm(vec![vec![1, 1], vec![1, 1]])), 0.0);
        // anti-diagonal: κ = −1
        assert_eq!(cohen_kappa(&cm(vec![vec![0, 2], vec![2, 0]])), -1.0);
    }

    #[test]
    fn kappa_degenerate_convention() {
        // All mass on one diagonal cell saturates chance agreement
        // (p_e = 1) with perfect observed agreement: κ = 1, not flagged.
        // (p_e = 1 with p_o < 1 cannot arise from integer counts; the
        // 0-with-flag convention only guards that branch.)
        let (k, flagged) = cohen_kappa_flagged(&cm(vec![vec![7, 0], vec![0, 0]]));
        assert_eq!(k, 1.0);
        assert!(!flagged);
        // single-class matrix, same saturation
        let (k, flagged) = cohen_kappa_flagged(&cm(vec![vec![9]]));
        assert_eq!(k, 1.0);
        assert!(!flagged);
        // one-sided predictions without overlap are not degenerate
        let (k, flagged) = cohen_kappa_flagged(&cm(vec![vec![0, 5], vec![0, 0]]));
        assert_eq!(k, 0.0);
        assert!(!flagged);
    }

    #[test]
    fn kappa_iff_diagonal() {
        let diag = cm(vec![vec![2, 0, 0], vec![0, 5, 0], vec![0, 0, 1]]);
        assert_eq!(cohen_kappa(&diag), 1.0);
        let not_diag = cm(vec![vec![2, 1, 0], vec![0, 5, 0], vec![0, 0, 1]]);
        assert!(cohen_kappa(&not_diag) < 1.0);
    }

    #[test]
    fn recall_handles_unobserved_classes() {
        let m = cm(vec![vec![2, 1], vec![0, 0]]);
        let rec = per_class_recall(&m);
        assert_eq!(rec[0], Some(1.0));
        assert_eq!(rec[1], Some(0.0));
        let m = cm(vec![vec![2, 0], vec![0, 0]]);
        assert_eq!(per_class_recall(&m)[1], None);
    }

    #[test]
    fn ari_hand_values() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]), 1.0);
        let v = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]);
        assert!((v - (-0.5)).abs() < 1e-12);
        let v = adjusted_rand_index(&[0, 0, 0, 1, 1, 1], &[0, 0, 1, 1, 2, 2]);
        assert!((v - 0.8 / 3.3).abs() < 1e-12);
        // both trivial single-cluster partitions
        assert_eq!(adjusted_rand_index(&[0, 0, 0], &[0, 0, 0]), 1.0);
    }
}
