//! Experiment orchestration for cost-aware sequential hypothesis testing.
//!
//! [`config`] parses and validates campaign files, [`instance`] builds the
//! 32-hypothesis / 16-action Gaussian benchmark, [`campaign`] runs seeded
//! Monte Carlo campaigns in parallel and [`output`] writes CSV, JSON and
//! plot-ready data.

pub mod campaign;
pub mod config;
pub mod error;
pub mod instance;
pub mod output;

pub use campaign::{run_campaign, CampaignResult, CellResult, HypothesisStats};
pub use config::{ExperimentConfig, InstanceSpec};
pub use error::HarnessError;
pub use instance::generate_paper_instance;
pub use output::emit_outputs;
