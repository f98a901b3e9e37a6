//! BIC model selection over (H, structure) pairs and hard assignment.

use ndarray::Array2;

use super::density::{joint_log_densities, log_sum_exp};
use super::em::em_fit;
use super::{CovKind, CovarianceStructure, GmmError, GmmModel};
use crate::data::ProfileMatrix;
use crate::rng::derive_seed;
use crate::scalar::Scalar;

/// Number of covariance parameters for a structure.
fn cov_params(structure: CovarianceStructure, h: usize, d: usize) -> usize {
    let per = match structure.kind {
        CovKind::Spherical => 1,
        CovKind::Diagonal => d,
        CovKind::Full => d * (d + 1) / 2,
    };
    if structure.tied {
        per
    } else {
        h * per
    }
}

/// Free parameters of an `h`-component, `d`-dimensional mixture:
/// `(H-1)` weights, `H·D` means, plus the covariance parameters.
pub fn free_params(structure: CovarianceStructure, h: usize, d: usize) -> usize {
    (h - 1) + h * d + cov_params(structure, h, d)
}

/// Bayesian information criterion, `-2 ln L + p ln n`; lower is better.
pub fn bic<T: Scalar>(model: &GmmModel<T>, n: usize) -> T {
    assert!(n >= 1, "BIC needs at least one observation");
    let p = free_params(model.structure, model.h(), model.dim());
    -T::of(2.0) * model.loglik + T::from_usize(p).unwrap() * T::of((n as f64).ln())
}

/// Smallest hard-assigned cluster a selected model may produce. A segment
/// below this cannot be stratified into a train/test split that still
/// trains, so such fits count as degenerate and are skipped.
pub const MIN_CLUSTER_MEMBERS: usize = 3;

/// Fit every (H, structure) pair and return the minimum-BIC model.
///
/// Fits that fail (degenerate components, non-PD covariances) or whose
/// hard assignment leaves a cluster with fewer than
/// [`MIN_CLUSTER_MEMBERS`] points are skipped with a warning; at least
/// one must succeed. Each fit gets its own seed derived from `seed`, so
/// the search is deterministic.
pub fn select_model<T: Scalar>(
    data: &ProfileMatrix<T>,
    h_range: std::ops::RangeInclusive<usize>,
    structures: &[CovarianceStructure],
    seed: u64,
    tol: T,
    max_iter: usize,
) -> Result<GmmModel<T>, GmmError> {
    if h_range.is_empty() {
        return Err(GmmError::InvalidSearchSpace("empty H range".into()));
    }
    if structures.is_empty() {
        return Err(GmmError::InvalidSearchSpace("no covariance structures".into()));
    }
    let mut best: Option<GmmModel<T>> = None;
    let mut fit_index = 0u64;
    for &structure in structures {
        for h in h_range.clone() {
            let fit_seed = derive_seed(seed, fit_index);
            fit_index += 1;
            match em_fit(data, h, structure, fit_seed, tol, max_iter) {
                Ok(model) => {
                    let (labels, _) = assign(&model, data)?;
                    let mut counts = vec![0usize; h];
                    for &l in &labels {
                        counts[l] += 1;
                    }
                    if let Some((k, &c)) =
                        counts.iter().enumerate().find(|(_, &c)| c < MIN_CLUSTER_MEMBERS)
                    {
                        log::warn!(
                            "skipping H={h} {structure}: cluster {k} holds {c} points \
                             (minimum {MIN_CLUSTER_MEMBERS})"
                        );
                        continue;
                    }
                    let better = best.as_ref().map_or(true, |b| model.bic < b.bic);
                    if better {
                        best = Some(model);
                    }
                }
                Err(err) => {
                    log::warn!("skipping H={h} {structure}: {err}");
                }
            }
        }
    }
    best.ok_or(GmmError::AllFitsFailed)
}

/// Hard labels and row-normalized posterior responsibilities.
///
/// Ties in the posterior break toward the lower component index.
pub fn assign<T: Scalar>(
    model: &GmmModel<T>,
    data: &ProfileMatrix<T>,
) -> Result<(Vec<usize>, Array2<T>), GmmError> {
    if data.n_features() != model.dim() {
        return Err(GmmError::DimensionMismatch {
            expected: model.dim(),
            got: data.n_features(),
        });
    }
    let n = data.n_rows();
    let h = model.h();
    let mut labels = Vec::with_capacity(n);
    let mut resp = Array2::zeros((n, h));
    for i in 0..n {
        let joint = joint_log_densities(data.row(i), model);
        let lse = log_sum_exp(&joint);
        let mut best = 0usize;
        for k in 0..h {
            let r = (joint[k] - lse).exp();
            resp[[i, k]] = r;
            if r > resp[[i, best]] {
                best = k;
            }
        }
        labels.push(best);
    }
    Ok((labels, resp))
}
