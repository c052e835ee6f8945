//! Monte-Carlo experiments on synthetic latent-factor data.

mod config;
mod experiment;
mod generate;
mod metrics;
mod report;

pub use config::{parse_config, SimConfig, DEFAULT_SEED};
pub use experiment::{
    run_estimation_experiment, run_selection_experiment, CriterionSummary, EstimatorSummary,
    SimResult, Stat,
};
pub use generate::{generate_dataset, generate_replicate, replicate_rng, Replicate};
pub use metrics::{kl_gaussian, metric_s1s2, ModelCovariance};
pub use report::{text_summary, write_estimation_csv, write_selection_csv};
