//! `profilecast`: segment half-hourly consumption profiles and predict
//! segment membership.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use profilecast_cli::commands::{self, TrainSpecArgs};
use profilecast_core::data::{FeatureMode, Granularity};
use profilecast_core::gmm::CovarianceStructure;

#[derive(Parser)]
#[command(
    name = "profilecast",
    about = "Consumption-profile segmentation (GMM) and cluster-membership prediction",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic population to a readings CSV plus truth file
    Synth {
        /// Population config (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Readings CSV to write
        #[arg(long)]
        out: PathBuf,
        /// Ground-truth CSV to write (entity_id,archetype_id)
        #[arg(long)]
        truth: PathBuf,
    },
    /// Build a feature matrix from a readings CSV
    Ingest {
        /// Readings CSV (entity_id,sector_id,day_index,slot_index,kwh)
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "disaggregated")]
        granularity: Granularity,
        /// "mean" or "mean+std"
        #[arg(long, default_value = "mean")]
        features: FeatureMode,
        /// Exclude entities below this cell-coverage fraction
        #[arg(long, default_value_t = 0.9)]
        coverage: f64,
        /// Matrix CSV to write
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit mixtures over an H range and structures, keep the best BIC
    Cluster {
        /// Matrix CSV
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "disaggregated")]
        granularity: Granularity,
        #[arg(long, default_value_t = 2)]
        h_min: usize,
        #[arg(long, default_value_t = 15)]
        h_max: usize,
        /// Comma-separated: spherical, diagonal, full, optionally -tied
        #[arg(long, value_delimiter = ',', default_value = "spherical,diagonal,full")]
        structures: Vec<CovarianceStructure>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        /// Mixture model file to write
        #[arg(long)]
        out: PathBuf,
        /// Hard-label CSV to write
        #[arg(long)]
        labels: PathBuf,
    },
    /// Train one classifier with explicit hyperparameters
    Train(TrainArgs),
    /// Evaluate a saved model on a labeled matrix
    Evaluate {
        /// Saved classifier model
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value = "disaggregated")]
        granularity: Granularity,
        /// Directory for report.csv and the confusion CSV
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the full two-arm experiment from a config file
    Pipeline {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// knn | forest | boost
    #[arg(long)]
    model: String,
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value = "disaggregated")]
    granularity: Granularity,
    /// Model file to write
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// KNN neighbor count
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Forest size
    #[arg(long, default_value_t = 500)]
    trees: usize,
    /// Features per split (default ⌊√D⌋)
    #[arg(long)]
    mtry: Option<usize>,
    /// Minimum observations per terminal node
    #[arg(long, default_value_t = 5)]
    min_node: usize,
    /// Depth cap for forest trees
    #[arg(long)]
    max_depth: Option<usize>,
    /// Boosting rounds
    #[arg(long, default_value_t = 200)]
    rounds: usize,
    /// Boosting tree depth
    #[arg(long, default_value_t = 3)]
    depth: usize,
    /// Boosting learning rate
    #[arg(long, default_value_t = 0.1)]
    rate: f64,
}

fn run(cli: Cli) -> Result<(), profilecast_cli::PipelineError> {
    match cli.command {
        Command::Synth { config, out, truth } => commands::cmd_synth(&config, &out, &truth),
        Command::Ingest { input, granularity, features, coverage, out } => {
            commands::cmd_ingest(&input, granularity, features, coverage, &out)
        }
        Command::Cluster {
            input,
            granularity,
            h_min,
            h_max,
            structures,
            seed,
            tol,
            max_iter,
            out,
            labels,
        } => commands::cmd_cluster(
            &input,
            granularity,
            h_min,
            h_max,
            &structures,
            seed,
            tol,
            max_iter,
            &out,
            &labels,
        ),
        Command::Train(args) => {
            let spec = match args.model.as_str() {
                "knn" => TrainSpecArgs::Knn { k: args.k },
                "forest" => TrainSpecArgs::Forest {
                    trees: args.trees,
                    mtry: args.mtry,
                    min_node: args.min_node,
                    max_depth: args.max_depth,
                },
                "boost" => TrainSpecArgs::Boost {
                    rounds: args.rounds,
                    depth: args.depth,
                    rate: args.rate,
                },
                other => {
                    return Err(profilecast_cli::PipelineError::Config(format!(
                        "unknown model `{other}` (knn|forest|boost)"
                    )))
                }
            };
            commands::cmd_train(&args.matrix, &args.labels, args.granularity, spec, args.seed, &args.out)
        }
        Command::Evaluate { model, matrix, labels, granularity, out_dir } => {
            commands::cmd_evaluate(&model, &matrix, &labels, granularity, &out_dir)
        }
        Command::Pipeline { config } => commands::cmd_pipeline(&config),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
