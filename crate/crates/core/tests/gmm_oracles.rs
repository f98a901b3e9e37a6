//! Independent numerical checks of the mixture code: quadrature of the
//! density, a dense grid-search bound on the EM log-likelihood, nested
//! structure ordering, and randomized monotonicity.

use ndarray::{array, Array1, Array2};
use profilecast_core::data::{feature_labels, Granularity, ProfileMatrix};
use profilecast_core::gmm::{
    em_fit, mixture_logpdf, select_model, CovKind, CovarianceStructure, GaussianComponent,
    GmmModel,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn matrix_1d(xs: &[f64]) -> ProfileMatrix<f64> {
    ProfileMatrix::new(
        (0..xs.len()).map(|i| format!("r{i:03}")).collect(),
        Array2::from_shape_vec((xs.len(), 1), xs.to_vec()).unwrap(),
        feature_labels(1),
        Granularity::Disaggregated,
    )
    .unwrap()
}

fn hand_model(mus: &[f64], sigmas: &[f64], weights: &[f64]) -> GmmModel<f64> {
    let comps = mus
        .iter()
        .zip(sigmas)
        .map(|(&m, &s)| GaussianComponent::from_spherical(array![m], s * s).unwrap())
        .collect();
    GmmModel::new(
        Array1::from_vec(weights.to_vec()),
        comps,
        -1.0,
        0.0,
        CovarianceStructure::new(CovKind::Spherical, false),
        0,
        vec![],
        0,
    )
    .unwrap()
}

/// Composite Simpson quadrature of exp(mixture_logpdf) over [lo, hi].
fn integrate_density(model: &GmmModel<f64>, lo: f64, hi: f64, steps: usize) -> f64 {
    assert!(steps % 2 == 0);
    let h = (hi - lo) / steps as f64;
    let f = |x: f64| mixture_logpdf(array![x].view(), model).exp();
    let mut sum = f(lo) + f(hi);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(lo + i as f64 * h);
    }
    sum * h / 3.0
}

#[test]
fn density_integrates_to_one() {
    let cases = [
        hand_model(&[0.0], &[1.0], &[1.0]),
        hand_model(&[-2.0, 3.0], &[0.5, 1.5], &[0.3, 0.7]),
        hand_model(&[-5.0, 0.0, 4.0], &[1.0, 0.2, 2.0], &[0.2, 0.5, 0.3]),
    ];
    for model in &cases {
        let lo = model.components.iter().map(|c| c.mean()[0]).fold(f64::INFINITY, f64::min) - 20.0;
        let hi =
            model.components.iter().map(|c| c.mean()[0]).fold(f64::NEG_INFINITY, f64::max) + 20.0;
        let mass = integrate_density(model, lo, hi, 4000);
        assert!((mass - 1.0).abs() < 1e-4, "integrated mass {mass}");
    }
}

/// Dense grid search over (μ1, μ2, σ shared, w) for a 1-D two-component
/// mixture; a lower bound on the attainable log-likelihood.
fn grid_search_loglik(xs: &[f64]) -> f64 {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = (hi - lo).max(1e-3);
    let mu_steps = 28;
    let mus: Vec<f64> =
        (0..=mu_steps).map(|i| lo + range * i as f64 / mu_steps as f64).collect();
    let sigmas: Vec<f64> = (0..22)
        .map(|i| range * 0.03 * (range / (range * 0.03)).powf(i as f64 / 21.0))
        .collect();
    let weights: Vec<f64> = (1..20).map(|i| i as f64 * 0.05).collect();

    let mut best = f64::NEG_INFINITY;
    for &m1 in &mus {
        for &m2 in &mus {
            if m2 < m1 {
                continue; // symmetric in component swap
            }
            for &s in &sigmas {
                let inv2s2 = 1.0 / (2.0 * s * s);
                let norm = 1.0 / (s * (2.0 * std::f64::consts::PI).sqrt());
                for &w in &weights {
                    let mut ll = 0.0;
                    for &x in xs {
                        let p1 = norm * (-(x - m1) * (x - m1) * inv2s2).exp();
                        let p2 = norm * (-(x - m2) * (x - m2) * inv2s2).exp();
                        ll += (w * p1 + (1.0 - w) * p2).ln();
                    }
                    if ll > best {
                        best = ll;
                    }
                }
            }
        }
    }
    best
}

#[test]
fn em_matches_grid_search_oracle_in_1d() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let tied_spherical = CovarianceStructure::new(CovKind::Spherical, true);
    for case in 0..5 {
        // small bimodal-ish samples, N <= 12
        let n = 8 + case;
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                let center = if i % 2 == 0 { -1.5 } else { 1.5 };
                center + rng.gen::<f64>() * 0.8
            })
            .collect();
        let data = matrix_1d(&xs);
        let oracle = grid_search_loglik(&xs);

        // best over a few seeds, since a single tiny-sample fit may stop
        // in a poor basin
        let mut em_best = f64::NEG_INFINITY;
        for seed in 0..5 {
            if let Ok(model) = em_fit(&data, 2, tied_spherical, seed, 1e-10, 1000) {
                em_best = em_best.max(model.loglik);
            }
        }
        assert!(
            em_best >= oracle - 1e-3,
            "case {case}: EM loglik {em_best} below grid bound {oracle}"
        );
    }
}

#[test]
fn full_structure_dominates_diagonal_on_shared_init() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut rows = Vec::new();
    for _ in 0..80 {
        let x: f64 = rng.gen::<f64>() * 2.0 - 1.0;
        // correlated second coordinate, so full covariance genuinely helps
        rows.push(vec![x - 5.0, 0.8 * x - 5.0 + 0.1 * rng.gen::<f64>()]);
    }
    for _ in 0..80 {
        let x: f64 = rng.gen::<f64>() * 2.0 - 1.0;
        rows.push(vec![x + 5.0, 0.8 * x + 5.0 + 0.1 * rng.gen::<f64>()]);
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let data = ProfileMatrix::new(
        (0..160).map(|i| format!("r{i:03}")).collect(),
        Array2::from_shape_vec((160, 2), flat).unwrap(),
        feature_labels(2),
        Granularity::Disaggregated,
    )
    .unwrap();

    let diag = em_fit(&data, 2, CovarianceStructure::new(CovKind::Diagonal, false), 3, 1e-9, 400)
        .unwrap();
    let full = em_fit(&data, 2, CovarianceStructure::new(CovKind::Full, false), 3, 1e-9, 400)
        .unwrap();
    assert!(
        full.loglik >= diag.loglik - 1e-6,
        "full {} < diagonal {}",
        full.loglik,
        diag.loglik
    );
}

#[test]
fn randomized_fits_have_monotone_loglik() {
    let structures = [
        CovarianceStructure::new(CovKind::Spherical, false),
        CovarianceStructure::new(CovKind::Spherical, true),
        CovarianceStructure::new(CovKind::Diagonal, false),
        CovarianceStructure::new(CovKind::Diagonal, true),
        CovarianceStructure::new(CovKind::Full, false),
        CovarianceStructure::new(CovKind::Full, true),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for fit in 0..30 {
        let d = 1 + fit % 3;
        let h = 1 + fit % 3;
        let n = 60 + (fit * 7) % 60;
        let rows: Vec<f64> = (0..n * d)
            .map(|j| {
                let blob = (j / d) % h;
                blob as f64 * 6.0 + rng.gen::<f64>()
            })
            .collect();
        let data = ProfileMatrix::new(
            (0..n).map(|i| format!("r{i:03}")).collect(),
            Array2::from_shape_vec((n, d), rows).unwrap(),
            feature_labels(d),
            Granularity::Disaggregated,
        )
        .unwrap();
        let structure = structures[fit % structures.len()];
        let model = em_fit(&data, h, structure, fit as u64, 1e-9, 300)
            .unwrap_or_else(|e| panic!("fit {fit} failed: {e}"));
        for w in model.loglik_trace.windows(2) {
            assert!(
                w[1] >= w[0] - 1e-8,
                "fit {fit} ({structure}, H={h}, D={d}): loglik fell {} -> {}",
                w[0],
                w[1]
            );
        }
    }
}

#[test]
fn recovers_archetype_count_on_synthetic_population() {
    use profilecast_core::data::{disaggregated_matrix, FeatureMode};
    use profilecast_core::eval::adjusted_rand_index;
    use profilecast_core::gmm::assign;
    use profilecast_core::synth::{
        default_archetypes_with_noise, generate, PopulationConfig, SectorMixing,
    };

    // three well-separated archetypes, low noise
    let arcs = default_archetypes_with_noise(0.3);
    let picked = vec![arcs[0].clone(), arcs[4].clone(), arcs[6].clone()];
    let config = PopulationConfig {
        archetypes: picked,
        mixing: vec![0.4, 0.35, 0.25],
        n_entities: 90,
        n_sectors: 5,
        sector_mixing: SectorMixing::Mixed,
        seed: 321,
        season_amplitude: 0.2,
    };
    let (series, truth) = generate(&config).unwrap();
    let matrix = disaggregated_matrix(&series, FeatureMode::Mean).unwrap();

    let structures = [
        CovarianceStructure::new(CovKind::Spherical, false),
        CovarianceStructure::new(CovKind::Diagonal, false),
    ];
    let model = select_model(&matrix, 2..=6, &structures, 17, 1e-7, 200).unwrap();
    assert_eq!(model.h(), 3, "selected H={} with {}", model.h(), model.structure);

    let (labels, _) = assign(&model, &matrix).unwrap();
    let truth_labels: Vec<usize> = truth.iter().map(|(_, a)| *a).collect();
    let ari = adjusted_rand_index(&labels, &truth_labels);
    assert!(ari > 0.95, "ARI {ari}");
}
