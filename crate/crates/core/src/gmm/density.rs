//! Gaussian log-densities, evaluated through the Cholesky factor.

use ndarray::{Array2, ArrayView1};

use super::{CovStore, GaussianComponent, GmmError, GmmModel};
use crate::scalar::Scalar;

/// Lower-triangular Cholesky factor of a symmetric matrix.
///
/// Fails with [`GmmError::NotPositiveDefinite`] when a pivot is not
/// strictly positive.
pub(crate) fn cholesky<T: Scalar>(a: &Array2<T>) -> Result<Array2<T>, GmmError> {
    let d = a.nrows();
    let mut l = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum = sum - l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if !(sum > T::zero()) || !sum.is_finite() {
                    return Err(GmmError::NotPositiveDefinite);
                }
                l[[i, j]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Squared Mahalanobis distance of `x` from the component mean.
fn mahalanobis_sq<T: Scalar>(x: ArrayView1<'_, T>, comp: &GaussianComponent<T>) -> T {
    match &comp.cov {
        CovStore::Spherical { var } => {
            let mut sq = T::zero();
            for (xi, mi) in x.iter().zip(comp.mu.iter()) {
                let d = *xi - *mi;
                sq = sq + d * d;
            }
            sq / *var
        }
        CovStore::Diagonal { var } => {
            let mut sq = T::zero();
            for ((xi, mi), vi) in x.iter().zip(comp.mu.iter()).zip(var.iter()) {
                let d = *xi - *mi;
                sq = sq + d * d / *vi;
            }
            sq
        }
        CovStore::Full { chol, .. } => {
            // forward-solve L y = (x - mu), then |y|^2
            let d = comp.mu.len();
            let mut y = vec![T::zero(); d];
            let mut sq = T::zero();
            for i in 0..d {
                let mut s = x[i] - comp.mu[i];
                for (k, yk) in y.iter().enumerate().take(i) {
                    s = s - chol[[i, k]] * *yk;
                }
                let yi = s / chol[[i, i]];
                y[i] = yi;
                sq = sq + yi * yi;
            }
            sq
        }
    }
}

/// Multivariate normal log-density
/// `-0.5 [ D ln(2π) + ln det Σ + (x-μ)ᵀ Σ⁻¹ (x-μ) ]`.
pub fn gaussian_logpdf<T: Scalar>(x: ArrayView1<'_, T>, comp: &GaussianComponent<T>) -> T {
    assert_eq!(x.len(), comp.dim(), "point dimension must match component");
    let d = T::from_usize(comp.dim()).unwrap();
    let half = T::of(0.5);
    -half * (d * T::ln_2pi() + comp.log_det + mahalanobis_sq(x, comp))
}

/// Per-component joint log-densities `ln w_k + ln N(x; μ_k, Σ_k)`.
pub(crate) fn joint_log_densities<T: Scalar>(x: ArrayView1<'_, T>, model: &GmmModel<T>) -> Vec<T> {
    model
        .weights
        .iter()
        .zip(&model.components)
        .map(|(w, c)| w.ln() + gaussian_logpdf(x, c))
        .collect()
}

/// Max-shifted log-sum-exp.
pub(crate) fn log_sum_exp<T: Scalar>(terms: &[T]) -> T {
    let m = terms.iter().copied().fold(T::neg_infinity(), T::max);
    if !m.is_finite() {
        return m;
    }
    let sum: T = terms.iter().map(|t| (*t - m).exp()).sum();
    m + sum.ln()
}

/// Mixture log-density `ln Σ_k w_k N(x; μ_k, Σ_k)` via max-shifted
/// summation.
pub fn mixture_logpdf<T: Scalar>(x: ArrayView1<'_, T>, model: &GmmModel<T>) -> T {
    log_sum_exp(&joint_log_densities(x, model))
}
