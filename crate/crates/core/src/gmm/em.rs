//! EM fitting with k-means++ initialization.
//!
//! Initialization seeds H centers with k-means++ on the data, hard-assigns
//! every point to its nearest center and runs one weighted M-step. EM then
//! alternates responsibilities and structure-constrained maximum-likelihood
//! updates until the log-likelihood improvement drops below `tol`.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::density::{gaussian_logpdf, log_sum_exp};
use super::{
    CovKind, CovarianceStructure, GaussianComponent, GmmError, GmmModel, COV_RIDGE,
};
use crate::data::ProfileMatrix;
use crate::scalar::Scalar;

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 200;

/// Fit an `h`-component mixture with the given covariance structure.
///
/// Deterministic given `seed`. An infinite `tol` returns the model right
/// after the initialization M-step.
pub fn em_fit<T: Scalar>(
    data: &ProfileMatrix<T>,
    h: usize,
    structure: CovarianceStructure,
    seed: u64,
    tol: T,
    max_iter: usize,
) -> Result<GmmModel<T>, GmmError> {
    if h == 0 {
        return Err(GmmError::InvalidComponentCount);
    }
    let n = data.n_rows();
    if n <= h {
        return Err(GmmError::TooFewPoints { n, h });
    }
    if !(tol > T::zero()) {
        return Err(GmmError::InvalidTol);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let resp0 = init_responsibilities(data, h, &mut rng);
    let (mut weights, mut comps) = m_step(data, &resp0, structure)?;
    let (mut resp, mut loglik) = e_step(data, &weights, &comps);
    let mut trace = vec![loglik];

    let updates = if tol.is_infinite() { 0 } else { max_iter };
    for _ in 0..updates {
        let (w, c) = m_step(data, &resp, structure)?;
        weights = w;
        comps = c;
        let (r, ll) = e_step(data, &weights, &comps);
        resp = r;
        trace.push(ll);
        let improvement = ll - loglik;
        loglik = ll;
        if improvement < tol {
            break;
        }
    }

    let n_iter = trace.len() - 1;
    let p = super::select::free_params(structure, h, data.n_features());
    let bic = -T::of(2.0) * loglik + T::from_usize(p).unwrap() * T::of((n as f64).ln());
    GmmModel::new(weights, comps, loglik, bic, structure, seed, trace, n_iter)
}

/// Posterior responsibilities and total log-likelihood at the given
/// parameters. The per-row log-sum-exp values are accumulated in row
/// order, so the sum is reproducible.
pub(crate) fn e_step<T: Scalar>(
    data: &ProfileMatrix<T>,
    weights: &Array1<T>,
    comps: &[GaussianComponent<T>],
) -> (Array2<T>, T) {
    let n = data.n_rows();
    let h = comps.len();
    let log_w: Vec<T> = weights.iter().map(|w| w.ln()).collect();
    let mut resp = Array2::zeros((n, h));
    let mut loglik = T::zero();
    let mut joint = vec![T::zero(); h];
    for i in 0..n {
        let x = data.row(i);
        for (k, comp) in comps.iter().enumerate() {
            joint[k] = log_w[k] + gaussian_logpdf(x, comp);
        }
        let lse = log_sum_exp(&joint);
        loglik = loglik + lse;
        for k in 0..h {
            resp[[i, k]] = (joint[k] - lse).exp();
        }
    }
    (resp, loglik)
}

/// Minimum responsibility mass a component needs for its covariance
/// update. A full untied covariance needs D+1 effective points; every
/// other structure estimates at most one variance per dimension (or pools
/// across components) and needs only 2.
fn mass_floor(structure: CovarianceStructure, d: usize) -> f64 {
    if structure.kind == CovKind::Full && !structure.tied {
        (d + 1) as f64
    } else {
        2.0
    }
}

/// Weighted maximum-likelihood update of weights, means and covariances,
/// constrained to the structure, with a relative diagonal ridge.
pub(crate) fn m_step<T: Scalar>(
    data: &ProfileMatrix<T>,
    resp: &Array2<T>,
    structure: CovarianceStructure,
) -> Result<(Array1<T>, Vec<GaussianComponent<T>>), GmmError> {
    let (n, d) = data.features().dim();
    let h = resp.ncols();
    let floor = mass_floor(structure, d);

    // component masses
    let mut mass = vec![T::zero(); h];
    for i in 0..n {
        for k in 0..h {
            mass[k] = mass[k] + resp[[i, k]];
        }
    }
    for (k, m) in mass.iter().enumerate() {
        if m.to64() < floor {
            return Err(GmmError::DegenerateComponent {
                component: k,
                mass: m.to64(),
                floor,
            });
        }
    }

    let weights = Array1::from_iter(mass.iter().map(|m| *m / T::from_usize(n).unwrap()));

    // means
    let mut means = Array2::<T>::zeros((h, d));
    for i in 0..n {
        let x = data.row(i);
        for k in 0..h {
            let r = resp[[i, k]];
            for j in 0..d {
                means[[k, j]] = means[[k, j]] + r * x[j];
            }
        }
    }
    for k in 0..h {
        for j in 0..d {
            means[[k, j]] = means[[k, j]] / mass[k];
        }
    }

    let ridge = T::of(COV_RIDGE);
    let comps = match (structure.kind, structure.tied) {
        (CovKind::Spherical, tied) => {
            // per-component mean squared distance, optionally pooled
            let mut sq = vec![T::zero(); h];
            for i in 0..n {
                let x = data.row(i);
                for k in 0..h {
                    let mut s = T::zero();
                    for j in 0..d {
                        let dv = x[j] - means[[k, j]];
                        s = s + dv * dv;
                    }
                    sq[k] = sq[k] + resp[[i, k]] * s;
                }
            }
            let dd = T::from_usize(d).unwrap();
            let vars: Vec<T> = if tied {
                let pooled =
                    sq.iter().copied().sum::<T>() / (T::from_usize(n).unwrap() * dd);
                vec![pooled; h]
            } else {
                sq.iter().zip(&mass).map(|(s, m)| *s / (*m * dd)).collect()
            };
            (0..h)
                .map(|k| {
                    let var = vars[k] + ridge * vars[k];
                    GaussianComponent::from_spherical(means.row(k).to_owned(), var)
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        (CovKind::Diagonal, tied) => {
            let mut sq = Array2::<T>::zeros((h, d));
            for i in 0..n {
                let x = data.row(i);
                for k in 0..h {
                    let r = resp[[i, k]];
                    for j in 0..d {
                        let dv = x[j] - means[[k, j]];
                        sq[[k, j]] = sq[[k, j]] + r * dv * dv;
                    }
                }
            }
            let var_rows: Vec<Array1<T>> = if tied {
                let mut pooled = Array1::<T>::zeros(d);
                for k in 0..h {
                    for j in 0..d {
                        pooled[j] = pooled[j] + sq[[k, j]];
                    }
                }
                let nn = T::from_usize(n).unwrap();
                pooled.mapv_inplace(|v| v / nn);
                vec![pooled; h]
            } else {
                (0..h)
                    .map(|k| {
                        Array1::from_iter((0..d).map(|j| sq[[k, j]] / mass[k]))
                    })
                    .collect()
            };
            var_rows
                .into_iter()
                .enumerate()
                .map(|(k, mut var)| {
                    let mean_var =
                        var.iter().copied().sum::<T>() / T::from_usize(d).unwrap();
                    let eps = ridge * mean_var;
                    var.mapv_inplace(|v| v + eps);
                    GaussianComponent::from_diagonal(means.row(k).to_owned(), var)
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        (CovKind::Full, tied) => {
            let mut scatters: Vec<Array2<T>> = vec![Array2::zeros((d, d)); h];
            let mut diff = vec![T::zero(); d];
            for i in 0..n {
                let x = data.row(i);
                for k in 0..h {
                    let r = resp[[i, k]];
                    for j in 0..d {
                        diff[j] = x[j] - means[[k, j]];
                    }
                    let s = &mut scatters[k];
                    for a in 0..d {
                        let ra = r * diff[a];
                        for b in 0..=a {
                            s[[a, b]] = s[[a, b]] + ra * diff[b];
                        }
                    }
                }
            }
            // mirror the lower triangle and normalize
            let finish = |mut s: Array2<T>, denom: T| -> Array2<T> {
                for a in 0..d {
                    for b in 0..a {
                        s[[a, b]] = s[[a, b]] / denom;
                        s[[b, a]] = s[[a, b]];
                    }
                    s[[a, a]] = s[[a, a]] / denom;
                }
                let trace: T = s.diag().iter().copied().sum();
                let eps = T::of(COV_RIDGE) * trace / T::from_usize(d).unwrap();
                for a in 0..d {
                    s[[a, a]] = s[[a, a]] + eps;
                }
                s
            };
            if tied {
                let mut pooled: Array2<T> = Array2::zeros((d, d));
                for s in &scatters {
                    pooled = pooled + s;
                }
                let pooled = finish(pooled, T::from_usize(n).unwrap());
                (0..h)
                    .map(|k| {
                        GaussianComponent::from_full(means.row(k).to_owned(), pooled.clone())
                    })
                    .collect::<Result<Vec<_>, _>>()?
            } else {
                scatters
                    .into_iter()
                    .enumerate()
                    .map(|(k, s)| {
                        let sigma = finish(s, mass[k]);
                        GaussianComponent::from_full(means.row(k).to_owned(), sigma)
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
        }
    };
    Ok((weights, comps))
}

fn sq_dist<T: Scalar>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    let mut s = T::zero();
    for (x, y) in a.iter().zip(b.iter()) {
        let d = *x - *y;
        s = s + d * d;
    }
    s
}

/// k-means++ seeding followed by a hard assignment, returned as one-hot
/// responsibilities.
fn init_responsibilities<T: Scalar>(
    data: &ProfileMatrix<T>,
    h: usize,
    rng: &mut ChaCha8Rng,
) -> Array2<T> {
    let n = data.n_rows();
    let mut centers = Vec::with_capacity(h);
    centers.push(rng.gen_range(0..n));
    let mut d2: Vec<T> =
        (0..n).map(|i| sq_dist(data.row(i), data.row(centers[0]))).collect();
    while centers.len() < h {
        let total: T = d2.iter().copied().sum();
        let next = if total > T::zero() {
            let r = T::of(rng.gen::<f64>()) * total;
            let mut acc = T::zero();
            let mut chosen = n - 1;
            for (i, w) in d2.iter().enumerate() {
                acc = acc + *w;
                if acc > r {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // all points coincide with an existing center
            rng.gen_range(0..n)
        };
        centers.push(next);
        for i in 0..n {
            let dist = sq_dist(data.row(i), data.row(next));
            if dist < d2[i] {
                d2[i] = dist;
            }
        }
    }

    let mut resp = Array2::zeros((n, h));
    for i in 0..n {
        let mut best = 0usize;
        let mut best_d = sq_dist(data.row(i), data.row(centers[0]));
        for (k, &c) in centers.iter().enumerate().skip(1) {
            let dist = sq_dist(data.row(i), data.row(c));
            if dist < best_d {
                best_d = dist;
                best = k;
            }
        }
        resp[[i, best]] = T::one();
    }
    resp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{feature_labels, Granularity};
    use ndarray::Array2;
    use rand_distr::{Distribution, Normal};

    fn matrix_from(rows: Vec<Vec<f64>>) -> ProfileMatrix<f64> {
        let n = rows.len();
        let d = rows[0].len();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        ProfileMatrix::new(
            (0..n).map(|i| format!("r{i:04}")).collect(),
            Array2::from_shape_vec((n, d), flat).unwrap(),
            feature_labels(d),
            Granularity::Disaggregated,
        )
        .unwrap()
    }

    fn two_blobs(seed: u64) -> ProfileMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let mut rows = Vec::new();
        for _ in 0..100 {
            rows.push(vec![-10.0 + noise.sample(&mut rng), -10.0 + noise.sample(&mut rng)]);
        }
        for _ in 0..100 {
            rows.push(vec![10.0 + noise.sample(&mut rng), 10.0 + noise.sample(&mut rng)]);
        }
        matrix_from(rows)
    }

    #[test]
    fn h1_is_the_sample_mle() {
        let data = matrix_from(vec![
            vec![1.0, 2.0],
            vec![3.0, -1.0],
            vec![0.5, 0.0],
            vec![2.5, 4.0],
        ]);
        let structure = CovarianceStructure::new(CovKind::Full, false);
        let model = em_fit(&data, 1, structure, 7, 1e-9, 100).unwrap();

        let n = 4.0;
        let mean: Vec<f64> = (0..2)
            .map(|j| (0..4).map(|i| data.features()[[i, j]]).sum::<f64>() / n)
            .collect();
        for j in 0..2 {
            assert!((model.components[0].mu[j] - mean[j]).abs() < 1e-12);
        }
        // sample covariance plus the documented ridge
        let mut cov = [[0.0f64; 2]; 2];
        for i in 0..4 {
            for a in 0..2 {
                for b in 0..2 {
                    cov[a][b] += (data.features()[[i, a]] - mean[a])
                        * (data.features()[[i, b]] - mean[b])
                        / n;
                }
            }
        }
        let eps = COV_RIDGE * (cov[0][0] + cov[1][1]) / 2.0;
        cov[0][0] += eps;
        cov[1][1] += eps;
        let sigma = model.components[0].sigma();
        for a in 0..2 {
            for b in 0..2 {
                assert!((sigma[[a, b]] - cov[a][b]).abs() < 1e-10);
            }
        }
        assert_eq!(model.weights[0], 1.0);
    }

    #[test]
    fn separated_blobs_recovered() {
        let data = two_blobs(11);
        for structure in [
            CovarianceStructure::new(CovKind::Spherical, false),
            CovarianceStructure::new(CovKind::Diagonal, true),
            CovarianceStructure::new(CovKind::Full, false),
        ] {
            let model = em_fit(&data, 2, structure, 3, 1e-8, 200).unwrap();
            let mut mus: Vec<f64> = model.components.iter().map(|c| c.mu[0]).collect();
            mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!((mus[0] + 10.0).abs() < 0.05, "{structure}: mu {}", mus[0]);
            assert!((mus[1] - 10.0).abs() < 0.05, "{structure}: mu {}", mus[1]);
            assert!((model.weights[0] - 0.5).abs() < 0.05);
        }
    }

    #[test]
    fn loglik_trace_non_decreasing() {
        let data = two_blobs(23);
        for h in [1, 2, 3] {
            let model = em_fit(
                &data,
                h,
                CovarianceStructure::new(CovKind::Diagonal, false),
                41,
                1e-9,
                300,
            )
            .unwrap();
            for w in model.loglik_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-8, "trace decreased: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn infinite_tol_stops_after_init() {
        let data = two_blobs(5);
        let model = em_fit(
            &data,
            2,
            CovarianceStructure::new(CovKind::Spherical, false),
            1,
            f64::INFINITY,
            100,
        )
        .unwrap();
        assert_eq!(model.n_iter, 0);
        assert_eq!(model.loglik_trace.len(), 1);
        assert!(model.loglik.is_finite());
    }

    #[test]
    fn fit_is_bit_reproducible() {
        let data = two_blobs(17);
        let structure = CovarianceStructure::new(CovKind::Full, false);
        let a = em_fit(&data, 2, structure, 99, 1e-8, 200).unwrap();
        let b = em_fit(&data, 2, structure, 99, 1e-8, 200).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.loglik_trace, b.loglik_trace);
        assert_eq!(a.components.len(), b.components.len());
        for (x, y) in a.components.iter().zip(&b.components) {
            assert_eq!(x.mu, y.mu);
            assert_eq!(x.sigma(), y.sigma());
        }
    }

    #[test]
    fn preconditions_checked() {
        let data = matrix_from(vec![vec![0.0], vec![1.0]]);
        let st = CovarianceStructure::new(CovKind::Spherical, false);
        assert!(matches!(em_fit(&data, 0, st, 1, 1e-6, 10), Err(GmmError::InvalidComponentCount)));
        assert!(matches!(
            em_fit(&data, 2, st, 1, 1e-6, 10),
            Err(GmmError::TooFewPoints { n: 2, h: 2 })
        ));
        assert!(matches!(em_fit(&data, 1, st, 1, 0.0, 10), Err(GmmError::InvalidTol)));
    }

    #[test]
    fn duplicate_points_collapse_to_degenerate_or_unfit() {
        // 4 identical points cannot support 2 distinct components
        let data = matrix_from(vec![vec![1.0, 1.0]; 4]);
        let st = CovarianceStructure::new(CovKind::Spherical, false);
        let res = em_fit(&data, 2, st, 3, 1e-6, 50);
        assert!(
            matches!(
                res,
                Err(GmmError::DegenerateComponent { .. }) | Err(GmmError::NotPositiveDefinite)
            ),
            "expected a degenerate fit, got {res:?}"
        );
    }

    #[test]
    fn generic_scalar_f32_fits() {
        let rows: Vec<Vec<f32>> = vec![
            vec![0.0, 0.1],
            vec![0.1, 0.0],
            vec![0.05, 0.02],
            vec![5.0, 5.1],
            vec![5.1, 5.0],
            vec![5.02, 5.05],
        ];
        let flat: Vec<f32> = rows.iter().flatten().copied().collect();
        let data = ProfileMatrix::<f32>::new(
            (0..6).map(|i| format!("r{i}")).collect(),
            Array2::from_shape_vec((6, 2), flat).unwrap(),
            feature_labels(2),
            Granularity::Disaggregated,
        )
        .unwrap();
        let model = em_fit(
            &data,
            2,
            CovarianceStructure::new(CovKind::Spherical, false),
            1,
            1e-4_f32,
            100,
        )
        .unwrap();
        assert_eq!(model.h(), 2);
        let mut mus: Vec<f32> = model.components.iter().map(|c| c.mu[0]).collect();
        mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((mus[0] - 0.05).abs() < 0.1);
        assert!((mus[1] - 5.04).abs() < 0.1);
    }
}
