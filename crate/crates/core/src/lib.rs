//! Segmentation and prediction of half-hourly consumption profiles.
//!
//! The library covers the full aggregation-vs-disaggregation experiment:
//!
//! * [`data`] — the 365×48 reading grid, CSV ingestion and the feature
//!   matrices for both granularities (per-entity and per-sector rows);
//! * [`synth`] — a seeded population generator with ground-truth archetype
//!   labels, standing in for proprietary meter data;
//! * [`gmm`] — Gaussian mixtures fitted by EM with BIC model selection,
//!   producing the behavioural cluster labels;
//! * [`classifiers`] — KNN, CART, random forest and SAMME boosting,
//!   predicting cluster membership from the same profile features;
//! * [`eval`] — stratified splits, k-fold cross-validation, accuracy,
//!   Cohen's kappa and confusion matrices.
//!
//! All numeric algorithms are generic over the [`scalar::Scalar`] float
//! type; the `*64` aliases below fix `f64`, which is what the CLI and the
//! file formats use.

pub mod classifiers;
pub mod data;
pub mod eval;
pub mod gmm;
pub mod rng;
pub mod scalar;
pub mod synth;

pub use scalar::Scalar;

/// `f64` profile matrix, the common case.
pub type ProfileMatrix64 = data::ProfileMatrix<f64>;
/// `f64` labeled dataset.
pub type LabeledDataset64 = data::LabeledDataset<f64>;
/// `f64` mixture model.
pub type GmmModel64 = gmm::GmmModel<f64>;
/// `f64` trained classifier.
pub type TrainedModel64 = classifiers::TrainedModel<f64>;
