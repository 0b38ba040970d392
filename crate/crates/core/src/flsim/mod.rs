//! Small-scale federated-learning simulator: softmax-regression clients,
//! data-poisoning attacks, group aggregation, and the defended training loop.

mod aggregate;
mod data;
mod mnist;
mod model;
mod protocol;
mod synthetic;

pub use aggregate::{geometric_median, group_aggregate, mean_model, median_objective, GEOMEDIAN_SMOOTHING};
pub use data::{apply_label_flip, apply_label_permutation, Attack, ClientState, Dataset};
pub use mnist::{load_mnist, parse_idx_images, parse_idx_labels, MnistData};
pub use model::{evaluate, local_train, loss_and_gradient, Hyperparams, Metric, ModelParams};
pub use protocol::{
    run_protocol, Federation, GroupTestRecord, ProtocolConfig, ProtocolRun, RoundMetrics, Strategy,
};
pub use synthetic::{make_mnist_federation, make_synthetic_federation, nested_malicious_set, SyntheticSpec};

use std::path::PathBuf;

use thiserror::Error;

use crate::codes::CodeError;
use crate::decoder::DecodeError;
use crate::group_test::GroupTestError;
use crate::trellis::TrellisError;

#[derive(Debug, Error)]
pub enum FlError {
    #[error("class {class} is not valid for {n_classes} classes")]
    InvalidClass { class: usize, n_classes: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("training loss became non-finite")]
    NonFiniteLoss,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset has no examples of source class {0}")]
    EmptySourceClass(usize),
    #[error("group {0} has no clients")]
    EmptyGroup(usize),
    #[error("invalid counts: {0}")]
    InvalidCounts(String),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("file not found: {0}")]
    FileMissing(PathBuf),
    #[error("bad magic number in {file}: expected {expected}, found {found}")]
    BadMagic { file: String, expected: u32, found: u32 },
    #[error("file {0} is truncated")]
    TruncatedFile(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Trellis(#[from] TrellisError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    GroupTest(#[from] GroupTestError),
}
