//! Gaussian mixture modelling: densities, EM fitting, covariance-structure
//! families and BIC model selection.
//!
//! Fits are deterministic given the seed, so cluster labels are exactly
//! reproducible run to run. Covariances live behind a structure-aware
//! store with a cached Cholesky factor; nothing ever inverts a matrix.

mod density;
mod em;
mod io;
mod select;

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::scalar::Scalar;

pub use density::{gaussian_logpdf, mixture_logpdf};
pub use em::{em_fit, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use io::{read_gmm, write_gmm};
pub use select::{assign, bic, free_params, select_model};

/// Diagonal ridge added to every M-step covariance, relative to the mean
/// diagonal entry. Keeps near-degenerate components positive definite.
pub const COV_RIDGE: f64 = 1e-6;

/// Tolerance for the covariance symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum GmmError {
    #[error("covariance is not positive definite")]
    NotPositiveDefinite,
    #[error("covariance is not symmetric at ({i},{j})")]
    AsymmetricCovariance { i: usize, j: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("component {component} collapsed (responsibility mass {mass:.3e} below {floor})")]
    DegenerateComponent { component: usize, mass: f64, floor: f64 },
    #[error("need more than {h} points to fit {h} components, got {n}")]
    TooFewPoints { n: usize, h: usize },
    #[error("component count must be >= 1")]
    InvalidComponentCount,
    #[error("tolerance must be > 0")]
    InvalidTol,
    #[error("invalid model search space: {0}")]
    InvalidSearchSpace(String),
    #[error("every (H, structure) fit failed")]
    AllFitsFailed,
    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),
    #[error("model file line {line}: {reason}")]
    ParseModel { line: usize, reason: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Covariance shape family, mclust style.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovKind {
    /// σ²I
    Spherical,
    /// diag(v₁..v_D)
    Diagonal,
    /// unrestricted symmetric positive definite
    Full,
}

impl CovKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CovKind::Spherical => "spherical",
            CovKind::Diagonal => "diagonal",
            CovKind::Full => "full",
        }
    }
}

/// Covariance structure: a shape family, optionally tied (shared) across
/// components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CovarianceStructure {
    pub kind: CovKind,
    pub tied: bool,
}

impl CovarianceStructure {
    pub const fn new(kind: CovKind, tied: bool) -> Self {
        Self { kind, tied }
    }

    /// The three untied structures, the usual search set.
    pub fn untied_all() -> Vec<Self> {
        vec![
            Self::new(CovKind::Spherical, false),
            Self::new(CovKind::Diagonal, false),
            Self::new(CovKind::Full, false),
        ]
    }
}

impl std::fmt::Display for CovarianceStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.tied {
            write!(f, "{}-tied", self.kind.as_str())
        } else {
            f.write_str(self.kind.as_str())
        }
    }
}

impl std::str::FromStr for CovarianceStructure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, tied) = match s.strip_suffix("-tied") {
            Some(base) => (base, true),
            None => (s, false),
        };
        let kind = match kind {
            "spherical" => CovKind::Spherical,
            "diagonal" => CovKind::Diagonal,
            "full" => CovKind::Full,
            other => return Err(format!("unknown covariance structure `{other}`")),
        };
        Ok(Self { kind, tied })
    }
}

/// Structure-aware covariance storage with cached factorization.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum CovStore<T> {
    Spherical { var: T },
    Diagonal { var: Array1<T> },
    Full { sigma: Array2<T>, chol: Array2<T> },
}

/// One mixture component: mean vector and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent<T> {
    pub(crate) mu: Array1<T>,
    pub(crate) cov: CovStore<T>,
    /// Cached log-determinant of the covariance.
    pub(crate) log_det: T,
}

impl<T: Scalar> GaussianComponent<T> {
    /// Isotropic component. `var` must be positive.
    pub fn from_spherical(mu: Array1<T>, var: T) -> Result<Self, GmmError> {
        if !(var > T::zero()) || !var.is_finite() {
            return Err(GmmError::NotPositiveDefinite);
        }
        let d = mu.len();
        let log_det = T::from_usize(d).unwrap() * var.ln();
        Ok(Self { mu, cov: CovStore::Spherical { var }, log_det })
    }

    /// Axis-aligned component. All variances must be positive.
    pub fn from_diagonal(mu: Array1<T>, var: Array1<T>) -> Result<Self, GmmError> {
        if var.len() != mu.len() {
            return Err(GmmError::DimensionMismatch { expected: mu.len(), got: var.len() });
        }
        if var.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
            return Err(GmmError::NotPositiveDefinite);
        }
        let log_det = var.iter().map(|v| v.ln()).sum();
        Ok(Self { mu, cov: CovStore::Diagonal { var }, log_det })
    }

    /// Full-covariance component; validates symmetry and factorizes.
    pub fn from_full(mu: Array1<T>, sigma: Array2<T>) -> Result<Self, GmmError> {
        let d = mu.len();
        if sigma.dim() != (d, d) {
            return Err(GmmError::DimensionMismatch { expected: d, got: sigma.nrows() });
        }
        let tol = T::of(SYMMETRY_TOL);
        for i in 0..d {
            for j in (i + 1)..d {
                let a = sigma[[i, j]];
                let b = sigma[[j, i]];
                if (a - b).abs() > tol * T::one().max(a.abs().max(b.abs())) {
                    return Err(GmmError::AsymmetricCovariance { i, j });
                }
            }
        }
        let chol = density::cholesky(&sigma)?;
        let log_det = chol.diag().iter().map(|l| l.ln()).sum::<T>() * T::of(2.0);
        Ok(Self { mu, cov: CovStore::Full { sigma, chol }, log_det })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mean(&self) -> &Array1<T> {
        &self.mu
    }

    /// Materialize the full covariance matrix regardless of storage.
    pub fn sigma(&self) -> Array2<T> {
        let d = self.dim();
        match &self.cov {
            CovStore::Spherical { var } => Array2::from_diag_elem(d, *var),
            CovStore::Diagonal { var } => Array2::from_diag(var),
            CovStore::Full { sigma, .. } => sigma.clone(),
        }
    }

    /// Lower-triangular Cholesky factor of the covariance.
    pub fn chol_lower(&self) -> Array2<T> {
        let d = self.dim();
        match &self.cov {
            CovStore::Spherical { var } => Array2::from_diag_elem(d, var.sqrt()),
            CovStore::Diagonal { var } => Array2::from_diag(&var.mapv(T::sqrt)),
            CovStore::Full { chol, .. } => chol.clone(),
        }
    }
}

/// A fitted mixture: weights, components and fit metadata.
#[derive(Debug, Clone)]
pub struct GmmModel<T> {
    pub weights: Array1<T>,
    pub components: Vec<GaussianComponent<T>>,
    pub loglik: T,
    pub bic: T,
    pub structure: CovarianceStructure,
    pub seed: u64,
    /// Log-likelihood after initialization and after each EM update.
    pub loglik_trace: Vec<T>,
    /// EM updates performed.
    pub n_iter: usize,
}

impl<T: Scalar> GmmModel<T> {
    /// Validate invariants: weights in the simplex, matching counts,
    /// finite log-likelihood, consistent dimensions.
    pub fn new(
        weights: Array1<T>,
        components: Vec<GaussianComponent<T>>,
        loglik: T,
        bic: T,
        structure: CovarianceStructure,
        seed: u64,
        loglik_trace: Vec<T>,
        n_iter: usize,
    ) -> Result<Self, GmmError> {
        if components.is_empty() {
            return Err(GmmError::InvalidComponentCount);
        }
        if weights.len() != components.len() {
            return Err(GmmError::InvalidWeights(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        if weights.iter().any(|w| *w < T::zero() || !w.is_finite()) {
            return Err(GmmError::InvalidWeights("weights must be finite and >= 0".into()));
        }
        let sum = weights.iter().copied().sum::<T>().to64();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(GmmError::InvalidWeights(format!("weights sum to {sum}")));
        }
        let d = components[0].dim();
        if components.iter().any(|c| c.dim() != d) {
            return Err(GmmError::DimensionMismatch { expected: d, got: 0 });
        }
        if !loglik.is_finite() {
            return Err(GmmError::InvalidWeights("log-likelihood must be finite".into()));
        }
        Ok(Self { weights, components, loglik, bic, structure, seed, loglik_trace, n_iter })
    }

    /// Number of components.
    pub fn h(&self) -> usize {
        self.components.len()
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }
}
