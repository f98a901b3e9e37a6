//! The two-arm experiment: build each granularity's matrix, segment it
//! with the BIC-selected mixture, label it, and score every classifier on
//! a stratified hold-out after 10-fold grid search.
//!
//! Artifacts are staged in a scratch directory and renamed into place on
//! success, so a failed run leaves nothing behind. Per-stage timings are
//! printed to stdout as JSON lines; the on-disk manifest carries no
//! timings, keeping artifact directories byte-identical across runs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use profilecast_core::classifiers::{
    train, BoostParams, ClassifierSpec, ForestParams, KnnParams,
};
use profilecast_core::data::{
    aggregate_by_sector, disaggregated_matrix, filter_by_coverage, load_readings, write_labels,
    write_matrix, write_readings, CsvSchema, DataError, Granularity, LabeledDataset, MeterSeries,
    ProfileMatrix,
};
use profilecast_core::eval::{
    cluster_profiles, evaluate_model, kfold_cv, segment_shares, stratified_split, EvalReport,
};
use profilecast_core::gmm::{assign, select_model, write_gmm, GmmModel};
use profilecast_core::rng::derive_seed;
use profilecast_core::synth::generate;

use crate::artifacts;
use crate::config::{PipelineConfig, PipelineInput};
use crate::PipelineError;

/// Chosen mixture per granularity.
#[derive(Debug, Clone)]
pub struct SelectedModelInfo {
    pub granularity: String,
    pub h: usize,
    pub structure: String,
    pub loglik: f64,
    pub bic: f64,
    pub seed: u64,
}

/// One attempted (granularity, classifier) pair.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub granularity: String,
    pub model: String,
    /// `ok` or the failure message.
    pub status: String,
    pub cv_params: Option<String>,
    pub cv_score: Option<f64>,
    pub holdout_accuracy: Option<f64>,
    pub kappa: Option<f64>,
    pub kappa_degenerate: bool,
}

#[derive(Debug)]
pub struct PipelineSummary {
    pub selected: Vec<SelectedModelInfo>,
    pub rows: Vec<ComparisonRow>,
    pub reports: Vec<EvalReport>,
    pub output_dir: PathBuf,
}

fn emit(value: serde_json::Value) {
    println!("{value}");
}

/// Run the full experiment described by `config`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineSummary, PipelineError> {
    let out = &config.output_dir;
    if out.exists() && out.read_dir()?.next().is_some() {
        return Err(PipelineError::Config(format!(
            "output dir {} exists and is not empty",
            out.display()
        )));
    }
    let staging = staging_path(out);
    if staging.exists() {
        std::fs::remove_dir_all(&staging)?;
    }
    // fails immediately when the output location is not writable
    std::fs::create_dir_all(&staging)?;

    match run_stages(config, &staging) {
        Ok(mut summary) => {
            if out.exists() {
                std::fs::remove_dir(out)?; // empty by the check above
            }
            std::fs::rename(&staging, out)?;
            summary.output_dir = out.clone();
            Ok(summary)
        }
        Err(e) => {
            let _ = std::fs::remove_dir_all(&staging);
            Err(e)
        }
    }
}

fn staging_path(out: &Path) -> PathBuf {
    let name = out.file_name().map_or_else(
        || "profilecast-out".to_string(),
        |n| n.to_string_lossy().into_owned(),
    );
    out.with_file_name(format!(".{name}.partial"))
}

fn run_stages(config: &PipelineConfig, staging: &Path) -> Result<PipelineSummary, PipelineError> {
    let t = Instant::now();
    let (series, truth) = match &config.input {
        PipelineInput::Synth(pop) => {
            let (series, truth) = generate(pop).map_err(|e| PipelineError::in_stage("synth", e))?;
            (series, Some(truth))
        }
        PipelineInput::Readings(path) => {
            let series = load_readings(path, &CsvSchema::default())
                .map_err(|e| PipelineError::in_stage("ingest", e))?;
            (series, None)
        }
    };
    let n_loaded = series.len();
    let (series, dropped) = filter_by_coverage(series, config.coverage_threshold);
    if series.is_empty() {
        return Err(PipelineError::in_stage("ingest", DataError::EmptyFile));
    }
    emit(json!({
        "stage": "input",
        "entities": n_loaded,
        "excluded_low_coverage": dropped.len(),
        "elapsed_ms": t.elapsed().as_millis() as u64,
    }));
    if let Some(truth) = &truth {
        let ids: Vec<String> = truth.iter().map(|(e, _)| e.clone()).collect();
        let labels: Vec<usize> = truth.iter().map(|(_, a)| *a).collect();
        write_labels(&staging.join("truth.csv"), "archetype_id", &ids, &labels)
            .map_err(|e| PipelineError::in_stage("synth", e))?;
    }

    let mut summary = PipelineSummary {
        selected: Vec::new(),
        rows: Vec::new(),
        reports: Vec::new(),
        output_dir: staging.to_path_buf(),
    };

    for (g_idx, &granularity) in config.granularities.iter().enumerate() {
        run_granularity(config, staging, &series, granularity, g_idx, &mut summary)?;
    }

    artifacts::write_report(&staging.join("report.csv"), &summary.reports)?;
    artifacts::write_comparison(&staging.join("comparison.csv"), &summary.rows)?;
    write_manifest(&staging.join("manifest.json"), config, &summary)?;
    Ok(summary)
}

fn run_granularity(
    config: &PipelineConfig,
    staging: &Path,
    series: &[MeterSeries],
    granularity: Granularity,
    g_idx: usize,
    summary: &mut PipelineSummary,
) -> Result<(), PipelineError> {
    let gname = granularity.as_str();
    let stage = |s: &str| format!("{s}/{gname}");

    let t = Instant::now();
    let matrix = match granularity {
        Granularity::Disaggregated => disaggregated_matrix(series, config.features),
        Granularity::Aggregated => aggregate_by_sector(series, config.features),
    }
    .map_err(|e| PipelineError::in_stage(stage("matrix"), e))?;
    write_matrix(&staging.join(format!("matrix_{gname}.csv")), &matrix)
        .map_err(|e| PipelineError::in_stage(stage("matrix"), e))?;
    emit(json!({
        "stage": "matrix",
        "granularity": gname,
        "rows": matrix.n_rows(),
        "features": matrix.n_features(),
        "elapsed_ms": t.elapsed().as_millis() as u64,
    }));

    let t = Instant::now();
    let model: GmmModel<f64> = select_model(
        &matrix,
        config.h_min..=config.h_max,
        &config.structures,
        derive_seed(config.gmm_seed, g_idx as u64),
        config.tol,
        config.max_iter,
    )
    .map_err(|e| PipelineError::in_stage(stage("cluster"), e))?;
    let (labels, _resp) =
        assign(&model, &matrix).map_err(|e| PipelineError::in_stage(stage("cluster"), e))?;
    write_gmm(&staging.join(format!("model_{gname}.gmm")), &model)
        .map_err(|e| PipelineError::in_stage(stage("cluster"), e))?;
    write_labels(
        &staging.join(format!("labels_{gname}.csv")),
        "cluster",
        matrix.row_ids(),
        &labels,
    )
    .map_err(|e| PipelineError::in_stage(stage("cluster"), e))?;
    artifacts::write_segments(
        &staging.join(format!("segments_{gname}.csv")),
        &segment_shares(&labels, model.h()),
    )?;
    artifacts::write_cluster_profiles(
        &staging.join(format!("cluster_profiles_{gname}.csv")),
        &cluster_profiles(&matrix, &labels, model.h()),
    )?;
    emit(json!({
        "stage": "cluster",
        "granularity": gname,
        "h": model.h(),
        "structure": model.structure.to_string(),
        "bic": model.bic,
        "elapsed_ms": t.elapsed().as_millis() as u64,
    }));
    summary.selected.push(SelectedModelInfo {
        granularity: gname.to_string(),
        h: model.h(),
        structure: model.structure.to_string(),
        loglik: model.loglik,
        bic: model.bic,
        seed: model.seed,
    });

    let dataset = LabeledDataset::new(matrix, labels, model.h())
        .map_err(|e| PipelineError::in_stage(stage("label"), e))?;
    let (train_set, test_set) =
        stratified_split(&dataset, config.test_fraction, derive_seed(config.eval_seed, g_idx as u64))
            .map_err(|e| PipelineError::in_stage(stage("split"), e))?;

    for (c_idx, cname) in config.classifier_set.iter().enumerate() {
        let t = Instant::now();
        let grid = build_grid(config, cname, train_set.matrix.n_features());
        let row = match run_classifier(config, &train_set, &test_set, &grid, gname, g_idx, c_idx) {
            Ok(report) => {
                artifacts::write_confusion(
                    &staging.join(format!("confusion_{cname}_{gname}.csv")),
                    &report.confusion,
                )?;
                let row = ComparisonRow {
                    granularity: gname.to_string(),
                    model: cname.clone(),
                    status: "ok".into(),
                    cv_params: Some(report.cv_params.clone()),
                    cv_score: Some(report.cv_score),
                    holdout_accuracy: Some(report.accuracy),
                    kappa: Some(report.kappa),
                    kappa_degenerate: report.kappa_degenerate,
                };
                summary.reports.push(report);
                row
            }
            Err(e) => ComparisonRow {
                granularity: gname.to_string(),
                model: cname.clone(),
                status: e.to_string().replace(',', ";"),
                cv_params: None,
                cv_score: None,
                holdout_accuracy: None,
                kappa: None,
                kappa_degenerate: false,
            },
        };
        emit(json!({
            "stage": "classify",
            "granularity": gname,
            "model": cname,
            "status": row.status,
            "cv_params": row.cv_params,
            "holdout_accuracy": row.holdout_accuracy,
            "elapsed_ms": t.elapsed().as_millis() as u64,
        }));
        summary.rows.push(row);
    }
    Ok(())
}

/// Hyperparameter grid for one classifier family at feature count `d`.
fn build_grid(config: &PipelineConfig, name: &str, d: usize) -> Vec<ClassifierSpec> {
    match name {
        "knn" => config
            .knn_grid
            .iter()
            .map(|&k| ClassifierSpec::Knn(KnnParams { k }))
            .collect(),
        "forest" => {
            let mtrys: Vec<usize> = match &config.forest_mtry_grid {
                Some(g) => g.clone(),
                None => {
                    let mut v = vec![
                        (d as f64).sqrt().floor() as usize,
                        (d / 4).max(1),
                        (d / 2).max(1),
                    ];
                    v.iter_mut().for_each(|m| *m = (*m).clamp(1, d));
                    v.dedup();
                    v
                }
            };
            mtrys
                .into_iter()
                .map(|m| {
                    ClassifierSpec::Forest(ForestParams {
                        n_trees: config.forest_trees,
                        mtry: Some(m),
                        min_node: config.forest_min_node,
                        max_depth: config.forest_max_depth,
                    })
                })
                .collect()
        }
        "boost" => {
            let mut grid = Vec::new();
            for &depth in &config.boost_depth_grid {
                for &rounds in &config.boost_rounds_grid {
                    grid.push(ClassifierSpec::Boost(BoostParams {
                        rounds,
                        max_depth: depth,
                        learning_rate: config.boost_rate,
                    }));
                }
            }
            grid
        }
        other => unreachable!("classifier set validated at config load: {other}"),
    }
}

fn run_classifier(
    config: &PipelineConfig,
    train_set: &LabeledDataset<f64>,
    test_set: &LabeledDataset<f64>,
    grid: &[ClassifierSpec],
    gname: &str,
    g_idx: usize,
    c_idx: usize,
) -> Result<EvalReport, PipelineError> {
    let cv_seed = derive_seed(config.eval_seed, 1000 + g_idx as u64);
    let cv = kfold_cv(train_set, grid, config.k_folds, cv_seed, config.cv_metric)?;
    let fit_seed = derive_seed(config.classifier_seed, (g_idx * 16 + c_idx) as u64);
    let model = train(&cv.best_spec, train_set, fit_seed)?;
    let report = evaluate_model(
        &model,
        test_set,
        gname,
        &cv.best_spec.to_string(),
        cv.best_score,
    )?;
    Ok(report)
}

fn write_manifest(
    path: &Path,
    config: &PipelineConfig,
    summary: &PipelineSummary,
) -> Result<(), PipelineError> {
    let gmm: Vec<serde_json::Value> = summary
        .selected
        .iter()
        .map(|s| {
            json!({
                "granularity": s.granularity,
                "h": s.h,
                "structure": s.structure,
                "loglik": s.loglik,
                "bic": s.bic,
                "seed": s.seed,
            })
        })
        .collect();
    let classifiers: Vec<serde_json::Value> = summary
        .rows
        .iter()
        .map(|r| {
            json!({
                "granularity": r.granularity,
                "model": r.model,
                "status": r.status,
                "cv_params": r.cv_params,
                "cv_score": r.cv_score,
                "holdout_accuracy": r.holdout_accuracy,
                "kappa": r.kappa,
            })
        })
        .collect();
    let manifest = json!({
        "version": 1,
        "granularities": config.granularities.iter().map(|g| g.as_str()).collect::<Vec<_>>(),
        "coverage_threshold": config.coverage_threshold,
        "h_range": [config.h_min, config.h_max],
        "structures": config.structures.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        "seeds": {
            "gmm": config.gmm_seed,
            "classifier": config.classifier_seed,
            "eval": config.eval_seed,
        },
        "gmm": gmm,
        "classifiers": classifiers,
    });
    std::fs::write(path, format!("{}\n", serde_json::to_string_pretty(&manifest)?))?;
    Ok(())
}

impl From<serde_json::Error> for PipelineError {
    fn from(e: serde_json::Error) -> Self {
        PipelineError::Config(format!("manifest serialization: {e}"))
    }
}

/// `synth` subcommand: generate a population to CSV plus its truth file.
pub fn synth_to_files(
    pop: &profilecast_core::synth::PopulationConfig,
    out: &Path,
    truth_path: &Path,
) -> Result<(), PipelineError> {
    let (series, truth) = generate(pop)?;
    write_readings(out, &series)?;
    let ids: Vec<String> = truth.iter().map(|(e, _)| e.clone()).collect();
    let labels: Vec<usize> = truth.iter().map(|(_, a)| *a).collect();
    write_labels(truth_path, "archetype_id", &ids, &labels)?;
    Ok(())
}

/// Build the feature matrix for one granularity from a readings file.
pub fn ingest_to_matrix(
    readings: &Path,
    granularity: Granularity,
    features: profilecast_core::data::FeatureMode,
    coverage_threshold: f64,
) -> Result<ProfileMatrix<f64>, PipelineError> {
    let series = load_readings(readings, &CsvSchema::default())?;
    let (series, dropped) = filter_by_coverage(series, coverage_threshold);
    if !dropped.is_empty() {
        log::info!("excluded {} low-coverage entities", dropped.len());
    }
    if series.is_empty() {
        return Err(PipelineError::Data(DataError::EmptyFile));
    }
    let matrix = match granularity {
        Granularity::Disaggregated => disaggregated_matrix(&series, features)?,
        Granularity::Aggregated => aggregate_by_sector(&series, features)?,
    };
    Ok(matrix)
}
