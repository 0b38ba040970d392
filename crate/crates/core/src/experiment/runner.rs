use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use super::{DatasetKind, ExperimentConfig, ExperimentError};
use crate::flsim::{
    load_mnist, make_mnist_federation, make_synthetic_federation, run_protocol, Federation, GroupTestRecord,
    MnistData, RoundMetrics, Strategy,
};
use crate::rng::derive_seed;

/// Header of the per-round CSV.
pub const CSV_COLUMNS: [&str; 10] =
    ["trial", "strategy", "lambda", "round", "top1", "attack_acc", "source_recall", "p_md", "p_fa", "excluded"];

/// One protocol run inside a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub trial: usize,
    pub seed: u64,
    pub strategy: Strategy,
    /// Threshold used; `None` for strategies that do not decode.
    pub lambda: Option<f64>,
    /// Malicious clients of the federation this run trained on.
    pub malicious: Vec<usize>,
    pub rounds: Vec<RoundMetrics>,
    pub group_test: Option<GroupTestRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    /// Ordered by trial, then strategy as listed in the config, then threshold.
    pub runs: Vec<RunRecord>,
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let k = values.len();
        if k == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / k as f64;
        let std = if k > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

/// Final-round statistics of one (strategy, threshold) pair across trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub strategy: Strategy,
    pub lambda: Option<f64>,
    pub trials: usize,
    pub top1: Stat,
    pub attack_acc: Stat,
    pub source_recall: Stat,
    pub p_md: Stat,
    pub p_fa: Stat,
}

fn lambda_field(lambda: Option<f64>) -> String {
    lambda.map(|l| l.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn row_count(&self) -> usize {
        self.runs.iter().map(|r| r.rounds.len()).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        for run in &self.runs {
            for m in &run.rounds {
                let excluded: Vec<String> = m.excluded.iter().map(|j| j.to_string()).collect();
                w.write_record([
                    run.trial.to_string(),
                    run.strategy.to_string(),
                    lambda_field(run.lambda),
                    m.round.to_string(),
                    m.top1.to_string(),
                    m.attack_acc.to_string(),
                    m.source_recall.to_string(),
                    m.p_md.to_string(),
                    m.p_fa.to_string(),
                    excluded.join(";"),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, ExperimentError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Statistics of the last round, in first-appearance order.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut order = Vec::new();
        let mut groups: BTreeMap<(Strategy, Option<u64>), Vec<&RoundMetrics>> = BTreeMap::new();
        for run in &self.runs {
            let key = (run.strategy, run.lambda.map(f64::to_bits));
            if !groups.contains_key(&key) {
                order.push((key, run.lambda));
            }
            if let Some(last) = run.rounds.last() {
                groups.entry(key).or_default().push(last);
            }
        }
        order
            .into_iter()
            .map(|(key, lambda)| {
                let ms = &groups[&key];
                let stat = |f: fn(&RoundMetrics) -> f64| Stat::of(&ms.iter().map(|m| f(m)).collect::<Vec<_>>());
                SummaryRow {
                    strategy: key.0,
                    lambda,
                    trials: ms.len(),
                    top1: stat(|m| m.top1),
                    attack_acc: stat(|m| m.attack_acc),
                    source_recall: stat(|m| m.source_recall),
                    p_md: stat(|m| m.p_md),
                    p_fa: stat(|m| m.p_fa),
                }
            })
            .collect()
    }

    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["strategy".to_string(), "lambda".into(), "trials".into()];
        for name in ["top1", "attack_acc", "source_recall", "p_md", "p_fa"] {
            header.push(format!("{name}_mean"));
            header.push(format!("{name}_std"));
        }
        w.write_record(&header)?;
        for row in self.summary() {
            let mut record = vec![row.strategy.to_string(), lambda_field(row.lambda), row.trials.to_string()];
            for s in [row.top1, row.attack_acc, row.source_recall, row.p_md, row.p_fa] {
                record.push(s.mean.to_string());
                record.push(s.std.to_string());
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Seed of trial `trial`, shared by every strategy and threshold in it.
pub fn trial_seed(master_seed: u64, trial: usize) -> u64 {
    derive_seed(master_seed, trial as u64)
}

fn run_trial(
    cfg: &ExperimentConfig,
    a: &crate::codes::AssignmentMatrix,
    mnist: Option<&MnistData>,
    trial: usize,
) -> Result<Vec<RunRecord>, ExperimentError> {
    let seed = trial_seed(cfg.master_seed, trial);
    let fed: Federation = match mnist {
        Some(data) => make_mnist_federation(data, cfg.n, cfg.n_malicious, cfg.validation_size, cfg.attack(), seed)?,
        None => make_synthetic_federation(cfg.n, cfg.n_malicious, &cfg.synthetic_spec(), cfg.attack(), seed)?,
    };
    let mut runs = Vec::new();
    for &strategy in &cfg.strategies {
        let lambdas: Vec<Option<f64>> = if strategy == Strategy::FedGt {
            cfg.thresholds.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        for lambda in lambdas {
            let protocol = cfg.protocol(lambda.unwrap_or(cfg.thresholds[0]))?;
            let run = run_protocol(&fed, a, &protocol, strategy, seed)?;
            runs.push(RunRecord {
                trial,
                seed,
                strategy,
                lambda,
                malicious: fed.malicious.clone(),
                rounds: run.rounds,
                group_test: run.group_test,
            });
        }
    }
    Ok(runs)
}

/// Runs every trial of `cfg`. Trials run in parallel for synthetic data and
/// sequentially for MNIST to bound memory; the report order is the same.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    let a = cfg.matrix()?;
    let mnist = match (cfg.dataset, &cfg.mnist_dir) {
        (DatasetKind::Mnist, Some(dir)) => Some(load_mnist(dir)?),
        _ => None,
    };
    let per_trial: Vec<Vec<RunRecord>> = match &mnist {
        Some(data) => (0..cfg.trials).map(|t| run_trial(cfg, &a, Some(data), t)).collect::<Result<_, _>>()?,
        None => (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, &a, None, t)).collect::<Result<_, _>>()?,
    };
    Ok(ExperimentReport { runs: per_trial.into_iter().flatten().collect() })
}
