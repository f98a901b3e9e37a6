//! Standalone subcommand implementations, each operating on the
//! intermediate CSV artifacts.

use std::path::Path;

use profilecast_core::classifiers::{
    load_model, save_model, train, BoostParams, ClassifierSpec, ForestParams, KnnParams,
};
use profilecast_core::data::{
    load_labels, load_matrix, write_labels, write_matrix, FeatureMode, Granularity,
    LabeledDataset,
};
use profilecast_core::eval::evaluate_model;
use profilecast_core::gmm::{assign, select_model, write_gmm, CovarianceStructure};

use crate::config::{load_pipeline_config, load_synth_config};
use crate::pipeline::{ingest_to_matrix, run_pipeline, synth_to_files};
use crate::{artifacts, PipelineError};

pub fn cmd_synth(config: &Path, out: &Path, truth: &Path) -> Result<(), PipelineError> {
    let pop = load_synth_config(config)?;
    synth_to_files(&pop, out, truth)?;
    log::info!("wrote {} and {}", out.display(), truth.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_ingest(
    readings: &Path,
    granularity: Granularity,
    features: FeatureMode,
    coverage: f64,
    out: &Path,
) -> Result<(), PipelineError> {
    let matrix = ingest_to_matrix(readings, granularity, features, coverage)?;
    write_matrix(out, &matrix)?;
    log::info!("wrote {} ({} rows)", out.display(), matrix.n_rows());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_cluster(
    matrix_path: &Path,
    granularity: Granularity,
    h_min: usize,
    h_max: usize,
    structures: &[CovarianceStructure],
    seed: u64,
    tol: f64,
    max_iter: usize,
    model_out: &Path,
    labels_out: &Path,
) -> Result<(), PipelineError> {
    let matrix = load_matrix::<f64>(matrix_path, granularity)?;
    let model = select_model(&matrix, h_min..=h_max, structures, seed, tol, max_iter)?;
    let (labels, _) = assign(&model, &matrix)?;
    write_gmm(model_out, &model)?;
    write_labels(labels_out, "cluster", matrix.row_ids(), &labels)?;
    println!(
        "selected H={} structure={} bic={:.4}",
        model.h(),
        model.structure,
        model.bic
    );
    Ok(())
}

/// Join a matrix with a label file by row id (order must match).
fn labeled_from_files(
    matrix_path: &Path,
    labels_path: &Path,
    granularity: Granularity,
) -> Result<LabeledDataset<f64>, PipelineError> {
    let matrix = load_matrix::<f64>(matrix_path, granularity)?;
    let labels = load_labels(labels_path)?;
    if labels.len() != matrix.n_rows() {
        return Err(PipelineError::Config(format!(
            "{} labels for {} matrix rows",
            labels.len(),
            matrix.n_rows()
        )));
    }
    for ((id, _), row_id) in labels.iter().zip(matrix.row_ids()) {
        if id != row_id {
            return Err(PipelineError::Config(format!(
                "label row `{id}` does not match matrix row `{row_id}`"
            )));
        }
    }
    let values: Vec<usize> = labels.iter().map(|(_, l)| *l).collect();
    let n_classes = values.iter().max().map_or(0, |m| m + 1).max(2);
    Ok(LabeledDataset::new(matrix, values, n_classes)?)
}

#[derive(Debug, Clone)]
pub enum TrainSpecArgs {
    Knn { k: usize },
    Forest { trees: usize, mtry: Option<usize>, min_node: usize, max_depth: Option<usize> },
    Boost { rounds: usize, depth: usize, rate: f64 },
}

pub fn cmd_train(
    matrix_path: &Path,
    labels_path: &Path,
    granularity: Granularity,
    spec_args: TrainSpecArgs,
    seed: u64,
    out: &Path,
) -> Result<(), PipelineError> {
    let dataset = labeled_from_files(matrix_path, labels_path, granularity)?;
    let spec = match spec_args {
        TrainSpecArgs::Knn { k } => ClassifierSpec::Knn(KnnParams { k }),
        TrainSpecArgs::Forest { trees, mtry, min_node, max_depth } => {
            ClassifierSpec::Forest(ForestParams { n_trees: trees, mtry, min_node, max_depth })
        }
        TrainSpecArgs::Boost { rounds, depth, rate } => {
            ClassifierSpec::Boost(BoostParams { rounds, max_depth: depth, learning_rate: rate })
        }
    };
    let model = train(&spec, &dataset, seed)?;
    save_model(out, &model)?;
    log::info!("trained {spec} on {} rows -> {}", dataset.len(), out.display());
    Ok(())
}

pub fn cmd_evaluate(
    model_path: &Path,
    matrix_path: &Path,
    labels_path: &Path,
    granularity: Granularity,
    out_dir: &Path,
) -> Result<(), PipelineError> {
    let dataset = labeled_from_files(matrix_path, labels_path, granularity)?;
    let model = load_model::<f64>(model_path)?;
    let mut test = dataset;
    // the model's class space wins when it is wider than the labels seen here
    if model.n_classes() > test.n_classes {
        test.n_classes = model.n_classes();
    }
    let report = evaluate_model(&model, &test, granularity.as_str(), "-", f64::NAN)?;
    std::fs::create_dir_all(out_dir)?;
    artifacts::write_report(&out_dir.join("report.csv"), std::slice::from_ref(&report))?;
    artifacts::write_confusion(
        &out_dir.join(format!("confusion_{}_{}.csv", report.model, granularity.as_str())),
        &report.confusion,
    )?;
    println!(
        "{} {}: accuracy={:.4} kappa={:.4}",
        report.model,
        granularity.as_str(),
        report.accuracy,
        report.kappa
    );
    Ok(())
}

pub fn cmd_pipeline(config_path: &Path) -> Result<(), PipelineError> {
    let config = load_pipeline_config(config_path)?;
    let summary = run_pipeline(&config)?;
    for row in &summary.rows {
        let acc = row.holdout_accuracy.map_or("-".into(), |a| format!("{:.1}%", a * 100.0));
        let kappa = row.kappa.map_or("-".into(), |k| format!("{k:.2}"));
        println!(
            "{:<14} {:<7} status={} accuracy={} kappa={}",
            row.granularity, row.model, row.status, acc, kappa
        );
    }
    println!("artifacts in {}", summary.output_dir.display());
    Ok(())
}
