use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::{geometric_median, group_aggregate, mean_model};
use super::{evaluate, local_train, Attack, ClientState, Dataset, FlError, Hyperparams, Metric, ModelParams};
use crate::codes::{AssignmentMatrix, DefectiveVector, SyndromeVector};
use crate::decoder::{decide, forward_backward, DecodeError, DecoderConfig};
use crate::group_test::{confusion, simulate_noisy_tests, threshold_test, MetricVector, DEFAULT_RHO};
use crate::rng::{derive_seed, derive_seed_path};
use crate::trellis::build_trellis;

const TRAIN_STREAM: u64 = 3;
const TEST_NOISE_STREAM: u64 = 4;

const GEOMEDIAN_TOL: f64 = 1e-7;
const GEOMEDIAN_MAX_ITERS: usize = 100;

/// Clients with their local data, plus the server's held-out sets.
#[derive(Debug, Clone)]
pub struct Federation {
    pub clients: Vec<ClientState>,
    /// Small clean set the server uses to score group aggregates.
    pub validation: Dataset,
    pub test: Dataset,
    /// Sorted indices of the malicious clients.
    pub malicious: Vec<usize>,
    pub attack: Attack,
}

impl Federation {
    pub fn defective_vector(&self) -> DefectiveVector {
        DefectiveVector::from_indices(self.clients.len(), &self.malicious)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[serde(rename = "fedgt")]
    FedGt,
    NoDefense,
    Oracle,
    #[serde(rename = "geomedian")]
    GeoMedian,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::FedGt, Strategy::NoDefense, Strategy::Oracle, Strategy::GeoMedian];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::FedGt => "fedgt",
            Strategy::NoDefense => "no_defense",
            Strategy::Oracle => "oracle",
            Strategy::GeoMedian => "geomedian",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown strategy {s:?} (expected fedgt, no_defense, oracle or geomedian)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub hp: Hyperparams,
    pub decoder: DecoderConfig,
    pub rho: f64,
    /// Metric scored on the validation set for each group. `None` picks source
    /// recall under a label flip and top-1 accuracy otherwise.
    pub test_metric: Option<Metric>,
    /// Crossover probability of simulated noise on the test outcomes.
    pub test_noise: f64,
}

impl ProtocolConfig {
    pub fn new(hp: Hyperparams, decoder: DecoderConfig) -> Self {
        Self { hp, decoder, rho: DEFAULT_RHO, test_metric: None, test_noise: 0.0 }
    }

    fn metric_for(&self, attack: Attack) -> Metric {
        self.test_metric.unwrap_or(match attack {
            Attack::LabelFlip { source, .. } => Metric::SourceRecall { source },
            Attack::None | Attack::LabelPermutation => Metric::Top1,
        })
    }
}

/// Test-set metrics after one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    /// 1-based.
    pub round: usize,
    pub top1: f64,
    pub attack_acc: f64,
    pub source_recall: f64,
    pub p_md: f64,
    pub p_fa: f64,
    /// Clients left out of this round's aggregate, ascending.
    pub excluded: Vec<usize>,
}

/// What the server saw and decided in the group-testing round.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupTestRecord {
    pub round: usize,
    pub group_metrics: Vec<f64>,
    pub outcome: SyndromeVector,
    pub llr: Vec<f64>,
    /// Either every client was flagged or the outcome had zero probability
    /// under the decoder's model; nobody is excluded in both cases.
    pub fallback_no_defense: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    pub strategy: Strategy,
    pub rounds: Vec<RoundMetrics>,
    pub group_test: Option<GroupTestRecord>,
}

fn group_test_round(
    fed: &Federation,
    a: &AssignmentMatrix,
    cfg: &ProtocolConfig,
    models: &[ModelParams],
    round: usize,
    master_seed: u64,
) -> Result<(Vec<usize>, GroupTestRecord), FlError> {
    let metric = cfg.metric_for(fed.attack);
    let group_metrics = (0..a.groups())
        .map(|i| evaluate(&group_aggregate(models, a, i)?, &fed.validation, metric))
        .collect::<Result<Vec<_>, _>>()?;
    let clean = threshold_test(&MetricVector::new(group_metrics.clone())?, cfg.rho);
    let outcome = simulate_noisy_tests(&clean, cfg.test_noise, derive_seed(master_seed, TEST_NOISE_STREAM));
    let trellis = build_trellis(a)?;
    let (excluded, llr, fallback) = match forward_backward(&trellis, &outcome, &cfg.decoder) {
        Ok(llr) => {
            let d = decide(&llr, cfg.decoder.threshold());
            (d.excluded(), llr.values().to_vec(), d.fallback_no_defense)
        }
        Err(DecodeError::AllPathsZeroProbability) => (Vec::new(), Vec::new(), true),
        Err(e) => return Err(e.into()),
    };
    Ok((excluded, GroupTestRecord { round, group_metrics, outcome, llr, fallback_no_defense: fallback }))
}

/// Trains a softmax-regression model over `hp.rounds` rounds of federated
/// averaging under `strategy`. Local training randomness depends only on
/// `(master_seed, round, client)`, so runs of different strategies with the
/// same seed see the same draws.
pub fn run_protocol(
    fed: &Federation,
    a: &AssignmentMatrix,
    cfg: &ProtocolConfig,
    strategy: Strategy,
    master_seed: u64,
) -> Result<ProtocolRun, FlError> {
    cfg.hp.validate()?;
    let n = fed.clients.len();
    if a.clients() != n {
        return Err(FlError::DimensionMismatch { expected: a.clients(), actual: n });
    }
    let truth = fed.defective_vector();
    let (source, target) = fed.attack.tracked_pair(fed.test.n_classes());
    let mut global = ModelParams::zeros(fed.test.n_classes(), fed.test.n_features());
    let mut excluded: Vec<usize> = if strategy == Strategy::Oracle { fed.malicious.clone() } else { Vec::new() };
    let mut group_test = None;
    let mut rounds = Vec::with_capacity(cfg.hp.rounds);

    for round in 1..=cfg.hp.rounds {
        let active: Vec<usize> = (0..n).filter(|j| excluded.binary_search(j).is_err()).collect();
        let models = active
            .par_iter()
            .map(|&j| local_train(&global, &fed.clients[j], &cfg.hp, derive_seed_path(master_seed, &[TRAIN_STREAM, round as u64, j as u64])))
            .collect::<Result<Vec<_>, _>>()?;

        let testing = strategy == Strategy::FedGt && round == cfg.hp.test_round;
        if testing {
            // nobody is excluded before the test, so `models` is indexed by client
            let (flagged, record) = group_test_round(fed, a, cfg, &models, round, master_seed)?;
            excluded = flagged;
            group_test = Some(record);
        }

        global = if strategy == Strategy::GeoMedian {
            geometric_median(&models, GEOMEDIAN_TOL, GEOMEDIAN_MAX_ITERS)
        } else {
            let kept: Vec<&ModelParams> = active
                .iter()
                .zip(&models)
                .filter(|(j, _)| excluded.binary_search(j).is_err())
                .map(|(_, m)| m)
                .collect();
            mean_model(&kept).unwrap_or(global)
        };

        let counts = confusion(&truth, &DefectiveVector::from_indices(n, &excluded))?;
        rounds.push(RoundMetrics {
            round,
            top1: evaluate(&global, &fed.test, Metric::Top1)?,
            attack_acc: evaluate(&global, &fed.test, Metric::AttackAcc { source, target })?,
            source_recall: evaluate(&global, &fed.test, Metric::SourceRecall { source })?,
            p_md: counts.p_md(),
            p_fa: counts.p_fa(),
            excluded: excluded.clone(),
        });
    }
    Ok(ProtocolRun { strategy, rounds, group_test })
}
