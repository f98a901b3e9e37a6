//! Declarative TOML configuration for the population generator and the
//! pipeline. Every field has a stated default; all randomness flows
//! through explicit seeds.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use profilecast_core::data::{FeatureMode, Granularity};
use profilecast_core::gmm::{CovarianceStructure, DEFAULT_MAX_ITER, DEFAULT_TOL};
use profilecast_core::synth::{
    default_archetypes_with_noise, default_mixing, Archetype, PopulationConfig, SectorMixing,
    MAX_SEASON_AMPLITUDE,
};

use crate::PipelineError;

fn config_err(msg: impl Into<String>) -> PipelineError {
    PipelineError::Config(msg.into())
}

/// Population file, mirroring `PopulationConfig`.
///
/// ```toml
/// n_entities = 1100
/// n_sectors = 50
/// sector_mixing = "mixed"       # or "homogeneous"
/// seed = 42
/// season_amplitude = 0.2        # 0 disables the seasonal curve
/// noise_scale = 1.0             # scales the default archetypes' noise
///
/// # optional custom archetypes replacing the nine defaults:
/// # [[archetypes]]
/// # id = 0
/// # base_profile = [ ...48 values... ]
/// # day_noise_sd = 0.03
/// # slot_noise_sd = 0.06
/// # weekend_scale = 1.1
/// # mixing = [ ...one weight per archetype... ]
/// ```
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthFileConfig {
    pub n_entities: usize,
    pub n_sectors: usize,
    #[serde(default = "default_sector_mixing")]
    pub sector_mixing: String,
    pub seed: u64,
    #[serde(default = "default_season_amplitude")]
    pub season_amplitude: f64,
    #[serde(default = "default_noise_scale")]
    pub noise_scale: f64,
    #[serde(default)]
    pub archetypes: Option<Vec<ArchetypeToml>>,
    #[serde(default)]
    pub mixing: Option<Vec<f64>>,
}

fn default_sector_mixing() -> String {
    "mixed".into()
}

fn default_season_amplitude() -> f64 {
    MAX_SEASON_AMPLITUDE
}

fn default_noise_scale() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchetypeToml {
    pub id: usize,
    pub base_profile: Vec<f64>,
    pub day_noise_sd: f64,
    pub slot_noise_sd: f64,
    #[serde(default = "default_weekend_scale")]
    pub weekend_scale: f64,
}

fn default_weekend_scale() -> f64 {
    1.0
}

impl SynthFileConfig {
    pub fn into_population(self) -> Result<PopulationConfig, PipelineError> {
        let archetypes: Vec<Archetype> = match self.archetypes {
            Some(list) => list
                .into_iter()
                .map(|a| Archetype {
                    id: a.id,
                    base_profile: a.base_profile,
                    day_noise_sd: a.day_noise_sd,
                    slot_noise_sd: a.slot_noise_sd,
                    weekend_scale: a.weekend_scale,
                })
                .collect(),
            None => default_archetypes_with_noise(self.noise_scale),
        };
        let mixing = match self.mixing {
            Some(m) => m,
            None => {
                if archetypes.len() == 9 {
                    default_mixing()
                } else {
                    return Err(config_err(
                        "custom archetypes need an explicit mixing vector",
                    ));
                }
            }
        };
        let sector_mixing: SectorMixing =
            self.sector_mixing.parse().map_err(config_err)?;
        let config = PopulationConfig {
            archetypes,
            mixing,
            n_entities: self.n_entities,
            n_sectors: self.n_sectors,
            sector_mixing,
            seed: self.seed,
            season_amplitude: self.season_amplitude,
        };
        config.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(config)
    }
}

/// Load and validate a population config file.
pub fn load_synth_config(path: &Path) -> Result<PopulationConfig, PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let file: SynthFileConfig =
        toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    file.into_population()
}

/// Pipeline file: input, sampling, clustering, classifiers, evaluation,
/// output. Defaults shown inline.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineFileConfig {
    pub input: InputSection,
    #[serde(default)]
    pub data: DataSection,
    pub gmm: GmmSection,
    #[serde(default)]
    pub classifiers: ClassifiersSection,
    pub eval: EvalSection,
    pub output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    /// Population config to generate in memory.
    #[serde(default)]
    pub synth_config: Option<PathBuf>,
    /// Readings CSV to ingest instead.
    #[serde(default)]
    pub readings: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub coverage_threshold: f64,
    /// "mean" or "mean+std"
    pub features: String,
    /// any of "aggregated", "disaggregated"
    pub granularities: Vec<String>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            coverage_threshold: 0.9,
            features: "mean".into(),
            granularities: vec!["aggregated".into(), "disaggregated".into()],
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmmSection {
    #[serde(default = "default_h_min")]
    pub h_min: usize,
    #[serde(default = "default_h_max")]
    pub h_max: usize,
    #[serde(default = "default_structures")]
    pub structures: Vec<String>,
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_h_min() -> usize {
    2
}

fn default_h_max() -> usize {
    15
}

fn default_structures() -> Vec<String> {
    vec!["spherical".into(), "diagonal".into(), "full".into()]
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifiersSection {
    /// any of "knn", "forest", "boost"
    pub set: Vec<String>,
    pub knn_grid: Vec<usize>,
    pub forest_trees: usize,
    /// `None` uses {⌊√D⌋, D/4, D/2} for the runtime feature count.
    pub forest_mtry_grid: Option<Vec<usize>>,
    pub forest_min_node: usize,
    pub forest_max_depth: Option<usize>,
    pub boost_depth_grid: Vec<usize>,
    pub boost_rounds_grid: Vec<usize>,
    pub boost_rate: f64,
    pub seed: u64,
}

impl Default for ClassifiersSection {
    fn default() -> Self {
        Self {
            set: vec!["knn".into(), "forest".into(), "boost".into()],
            knn_grid: vec![3, 5, 9, 15, 25],
            forest_trees: 500,
            forest_mtry_grid: None,
            forest_min_node: 5,
            forest_max_depth: None,
            boost_depth_grid: vec![2, 3],
            boost_rounds_grid: vec![100, 200, 400],
            boost_rate: 0.1,
            seed: 7,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    #[serde(default = "default_k_folds")]
    pub k_folds: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_cv_metric")]
    pub cv_metric: String,
    pub seed: u64,
}

fn default_k_folds() -> usize {
    10
}

fn default_test_fraction() -> f64 {
    0.25
}

fn default_cv_metric() -> String {
    "accuracy".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

/// Fully-resolved pipeline configuration.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub input: PipelineInput,
    pub coverage_threshold: f64,
    pub features: FeatureMode,
    pub granularities: Vec<Granularity>,
    pub h_min: usize,
    pub h_max: usize,
    pub structures: Vec<CovarianceStructure>,
    pub gmm_seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub classifier_set: Vec<String>,
    pub knn_grid: Vec<usize>,
    pub forest_trees: usize,
    pub forest_mtry_grid: Option<Vec<usize>>,
    pub forest_min_node: usize,
    pub forest_max_depth: Option<usize>,
    pub boost_depth_grid: Vec<usize>,
    pub boost_rounds_grid: Vec<usize>,
    pub boost_rate: f64,
    pub classifier_seed: u64,
    pub k_folds: usize,
    pub test_fraction: f64,
    pub cv_metric: profilecast_core::eval::CvMetric,
    pub eval_seed: u64,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub enum PipelineInput {
    Synth(PopulationConfig),
    Readings(PathBuf),
}

impl PipelineFileConfig {
    pub fn resolve(self, base_dir: &Path) -> Result<PipelineConfig, PipelineError> {
        let input = match (self.input.synth_config, self.input.readings) {
            (Some(synth), None) => {
                PipelineInput::Synth(load_synth_config(&base_dir.join(synth))?)
            }
            (None, Some(readings)) => PipelineInput::Readings(base_dir.join(readings)),
            (Some(_), Some(_)) => {
                return Err(config_err("give either input.synth_config or input.readings"))
            }
            (None, None) => {
                return Err(config_err("input needs synth_config or readings"))
            }
        };

        let features: FeatureMode = self.data.features.parse().map_err(config_err)?;
        let granularities: Vec<Granularity> = self
            .data
            .granularities
            .iter()
            .map(|g| g.parse().map_err(config_err))
            .collect::<Result<_, _>>()?;
        if granularities.is_empty() {
            return Err(config_err("at least one granularity required"));
        }
        if !(0.0..=1.0).contains(&self.data.coverage_threshold) {
            return Err(config_err("coverage_threshold must be in [0,1]"));
        }

        if self.gmm.h_min < 1 || self.gmm.h_min > self.gmm.h_max {
            return Err(config_err(format!(
                "invalid H range {}..{}",
                self.gmm.h_min, self.gmm.h_max
            )));
        }
        let structures: Vec<CovarianceStructure> = self
            .gmm
            .structures
            .iter()
            .map(|s| s.parse().map_err(config_err))
            .collect::<Result<_, _>>()?;
        if structures.is_empty() {
            return Err(config_err("at least one covariance structure required"));
        }
        if !(self.gmm.tol > 0.0) {
            return Err(config_err("gmm.tol must be > 0"));
        }

        for name in &self.classifiers.set {
            if !matches!(name.as_str(), "knn" | "forest" | "boost") {
                return Err(config_err(format!("unknown classifier `{name}`")));
            }
        }
        if self.classifiers.set.is_empty() {
            return Err(config_err("at least one classifier required"));
        }

        if !(self.eval.test_fraction > 0.0 && self.eval.test_fraction < 1.0) {
            return Err(config_err("eval.test_fraction must be in (0,1)"));
        }
        if self.eval.k_folds < 2 {
            return Err(config_err("eval.k_folds must be >= 2"));
        }
        let cv_metric = self.eval.cv_metric.parse().map_err(config_err)?;

        Ok(PipelineConfig {
            input,
            coverage_threshold: self.data.coverage_threshold,
            features,
            granularities,
            h_min: self.gmm.h_min,
            h_max: self.gmm.h_max,
            structures,
            gmm_seed: self.gmm.seed,
            tol: self.gmm.tol,
            max_iter: self.gmm.max_iter,
            classifier_set: self.classifiers.set,
            knn_grid: self.classifiers.knn_grid,
            forest_trees: self.classifiers.forest_trees,
            forest_mtry_grid: self.classifiers.forest_mtry_grid,
            forest_min_node: self.classifiers.forest_min_node,
            forest_max_depth: self.classifiers.forest_max_depth,
            boost_depth_grid: self.classifiers.boost_depth_grid,
            boost_rounds_grid: self.classifiers.boost_rounds_grid,
            boost_rate: self.classifiers.boost_rate,
            classifier_seed: self.classifiers.seed,
            k_folds: self.eval.k_folds,
            test_fraction: self.eval.test_fraction,
            cv_metric,
            eval_seed: self.eval.seed,
            output_dir: base_dir.join(self.output.dir),
        })
    }
}

/// Load and resolve a pipeline config; relative paths inside the file are
/// taken relative to the file's directory.
pub fn load_pipeline_config(path: &Path) -> Result<PipelineConfig, PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let file: PipelineFileConfig =
        toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    file.resolve(base)
}
