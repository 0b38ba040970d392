//! Experiment configuration, Monte-Carlo orchestration, CSV reports, the
//! decoder-only evaluation, and cost/privacy summaries.

mod config;
mod cost;
mod decoder_only;
mod runner;

pub use config::{AttackKind, DatasetKind, ExperimentConfig};
pub use cost::{comm_cost, privacy_report, CommCost, PrivacyReport, SecAggCostModel};
pub use decoder_only::{
    binomial, run_decoder_only, DecoderOnlyConfig, DecoderOnlyReport, DecoderOnlyRow, EXHAUSTIVE_LIMIT,
};
pub use runner::{run_experiment, trial_seed, ExperimentReport, RunRecord, Stat, SummaryRow, CSV_COLUMNS};

use thiserror::Error;

use crate::codes::CodeError;
use crate::decoder::DecodeError;
use crate::flsim::FlError;
use crate::trellis::TrellisError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Trellis(#[from] TrellisError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Fl(#[from] FlError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
