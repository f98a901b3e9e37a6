//! Segment-share tables, per-cluster profiles, and hold-out evaluation
//! reports.

use super::metrics::{accuracy, cohen_kappa_flagged, confusion, per_class_recall, ConfusionMatrix};
use super::EvalError;
use crate::classifiers::TrainedModel;
use crate::data::{LabeledDataset, ProfileMatrix};
use crate::scalar::Scalar;

/// One row of the segment-share table.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentShare {
    pub cluster: usize,
    pub count: usize,
    /// Share of the sample in percent.
    pub share_pct: f64,
}

/// Cluster sizes as percentages of the sample.
pub fn segment_shares(labels: &[usize], h: usize) -> Vec<SegmentShare> {
    assert!(!labels.is_empty());
    let mut counts = vec![0usize; h];
    for &l in labels {
        counts[l] += 1;
    }
    let n = labels.len() as f64;
    counts
        .into_iter()
        .enumerate()
        .map(|(cluster, count)| SegmentShare {
            cluster,
            count,
            share_pct: count as f64 / n * 100.0,
        })
        .collect()
}

/// Per-slot mean and population standard deviation of one cluster's rows.
#[derive(Debug, Clone)]
pub struct ClusterProfile {
    pub cluster: usize,
    pub count: usize,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Mean ± spread profile for every non-empty cluster.
pub fn cluster_profiles<T: Scalar>(
    matrix: &ProfileMatrix<T>,
    labels: &[usize],
    h: usize,
) -> Vec<ClusterProfile> {
    assert_eq!(matrix.n_rows(), labels.len());
    let d = matrix.n_features();
    let mut out = Vec::new();
    for cluster in 0..h {
        let members: Vec<usize> =
            labels.iter().enumerate().filter(|(_, &l)| l == cluster).map(|(i, _)| i).collect();
        if members.is_empty() {
            continue;
        }
        let k = members.len() as f64;
        let mut mean = vec![0.0f64; d];
        for &i in &members {
            for (m, v) in mean.iter_mut().zip(matrix.row(i)) {
                *m += v.to64();
            }
        }
        mean.iter_mut().for_each(|m| *m /= k);
        let mut sd = vec![0.0f64; d];
        for &i in &members {
            for ((s, m), v) in sd.iter_mut().zip(&mean).zip(matrix.row(i)) {
                let dv = v.to64() - m;
                *s += dv * dv;
            }
        }
        sd.iter_mut().for_each(|s| *s = (*s / k).sqrt());
        out.push(ClusterProfile { cluster, count: members.len(), mean, sd });
    }
    out
}

/// Metrics of one model on one sample.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub model: String,
    pub granularity: String,
    pub accuracy: f64,
    pub kappa: f64,
    /// Set when kappa hit the degenerate chance-saturated case.
    pub kappa_degenerate: bool,
    pub confusion: ConfusionMatrix,
    pub per_class_recall: Vec<Option<f64>>,
    /// Hyperparameters chosen by cross-validation.
    pub cv_params: String,
    /// Mean CV score of the chosen grid point.
    pub cv_score: f64,
}

/// Evaluate a trained model on a hold-out set.
pub fn evaluate_model<T: Scalar>(
    model: &TrainedModel<T>,
    test: &LabeledDataset<T>,
    granularity: &str,
    cv_params: &str,
    cv_score: f64,
) -> Result<EvalReport, EvalError> {
    let predicted: Vec<usize> =
        (0..test.len()).map(|i| model.predict(test.matrix.row(i))).collect();
    let cm = confusion(&predicted, &test.labels, test.n_classes)?;
    let (kappa, kappa_degenerate) = cohen_kappa_flagged(&cm);
    Ok(EvalReport {
        model: model.kind_name().to_string(),
        granularity: granularity.to_string(),
        accuracy: accuracy(&cm),
        kappa,
        kappa_degenerate,
        per_class_recall: per_class_recall(&cm),
        confusion: cm,
        cv_params: cv_params.to_string(),
        cv_score,
    })
}
