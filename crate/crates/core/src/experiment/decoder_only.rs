use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::io::Write;

use rand::seq::index::sample;

use super::{ExperimentConfig, ExperimentError};
use crate::codes::{AssignmentMatrix, SyndromeVector};
use crate::decoder::{decide, forward_backward, DecodeError, DecoderConfig, LlrVector};
use crate::group_test::flip_bits;
use crate::rng::rng_from_seed;
use crate::trellis::{build_trellis, Trellis};

/// Largest `C(n, n_m) * 2^m` evaluated by full enumeration.
pub const EXHAUSTIVE_LIMIT: f64 = 1e7;

/// Coding-layer experiment: no training, just defective draws, channel noise
/// and decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderOnlyConfig {
    pub n_malicious: usize,
    /// Crossover probability of the simulated test channel.
    pub true_crossover: f64,
    /// Decoder prior and assumed crossover; may differ from the truth.
    pub decoder: DecoderConfig,
    pub thresholds: Vec<f64>,
    /// Draws used when enumeration is too large.
    pub trials: usize,
    pub seed: u64,
}

impl DecoderOnlyConfig {
    pub fn from_experiment(cfg: &ExperimentConfig) -> Result<Self, ExperimentError> {
        cfg.validate()?;
        Ok(Self {
            n_malicious: cfg.n_malicious,
            true_crossover: cfg.test_noise,
            decoder: cfg.decoder(cfg.thresholds[0])?,
            thresholds: cfg.thresholds.clone(),
            trials: cfg.trials,
            seed: cfg.master_seed,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderOnlyRow {
    pub lambda: f64,
    /// Misdetections per malicious client.
    pub p_md: f64,
    /// False alarms per benign client.
    pub p_fa: f64,
    /// Misdetections per client.
    pub p_md_per_client: f64,
    /// False alarms per client.
    pub p_fa_per_client: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderOnlyReport {
    /// Exact expectation over all placements and test outcomes, as opposed to
    /// a Monte-Carlo estimate.
    pub exhaustive: bool,
    /// Placements times outcomes when exhaustive, draws otherwise.
    pub evaluations: u64,
    pub rows: Vec<DecoderOnlyRow>,
}

impl DecoderOnlyReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "p_md", "p_fa", "p_md_per_client", "p_fa_per_client", "exhaustive"])?;
        for r in &self.rows {
            w.write_record([
                r.lambda.to_string(),
                r.p_md.to_string(),
                r.p_fa.to_string(),
                r.p_md_per_client.to_string(),
                r.p_fa_per_client.to_string(),
                self.exhaustive.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `C(n, k)` as a float, exact for the sizes used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Flagged-client masks of one test outcome, one per threshold. A zero
/// probability outcome flags nobody.
fn flagged_masks(llr: &Result<LlrVector, DecodeError>, thresholds: &[f64]) -> Vec<u64> {
    thresholds
        .iter()
        .map(|&lambda| match llr {
            Ok(llr) => decide(llr, lambda).excluded().iter().fold(0u64, |m, &j| m | 1 << j),
            Err(_) => 0,
        })
        .collect()
}

fn decode(trellis: &Trellis, t: SyndromeVector, cfg: &DecoderConfig) -> Result<Result<LlrVector, DecodeError>, ExperimentError> {
    match forward_backward(trellis, &t, cfg) {
        Err(DecodeError::AllPathsZeroProbability) => Ok(Err(DecodeError::AllPathsZeroProbability)),
        Err(e) => Err(e.into()),
        ok => Ok(ok),
    }
}

/// Calls `f` with the client mask of every `k`-subset of `0..n`, in
/// lexicographic order of index sets.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(u64)) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(idx.iter().fold(0u64, |m, &j| m | 1 << j));
        let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[pos] += 1;
        for i in pos + 1..k {
            idx[i] = idx[i - 1] + 1;
        }
    }
}

fn rows_from_totals(n: usize, n_m: usize, thresholds: &[f64], md: &[f64], fa: &[f64]) -> Vec<DecoderOnlyRow> {
    thresholds
        .iter()
        .enumerate()
        .map(|(k, &lambda)| DecoderOnlyRow {
            lambda,
            p_md: md[k] / n_m.max(1) as f64,
            p_fa: fa[k] / (n - n_m).max(1) as f64,
            p_md_per_client: md[k] / n as f64,
            p_fa_per_client: fa[k] / n as f64,
        })
        .collect()
}

/// Misdetection and false-alarm rates of the decoder when exactly
/// `n_malicious` clients, placed uniformly at random, are malicious and the
/// noiseless outcomes pass through a binary symmetric channel.
pub fn run_decoder_only(a: &AssignmentMatrix, cfg: &DecoderOnlyConfig) -> Result<DecoderOnlyReport, ExperimentError> {
    let (n, m) = (a.clients(), a.groups());
    if n > 64 {
        return Err(ExperimentError::Config(format!("decoder-only mode supports at most 64 clients, got {n}")));
    }
    if cfg.n_malicious > n {
        return Err(ExperimentError::Config(format!("n_malicious = {} exceeds n = {n}", cfg.n_malicious)));
    }
    if !(0.0..=1.0).contains(&cfg.true_crossover) {
        return Err(ExperimentError::Config(format!("true crossover {} not in [0, 1]", cfg.true_crossover)));
    }
    if cfg.thresholds.is_empty() {
        return Err(ExperimentError::Config("thresholds must not be empty".into()));
    }
    let trellis = build_trellis(a)?;
    let size = binomial(n, cfg.n_malicious) * 2f64.powi(m as i32);
    if size <= EXHAUSTIVE_LIMIT {
        exhaustive(a, &trellis, cfg)
    } else {
        sampled(a, &trellis, cfg)
    }
}

fn exhaustive(a: &AssignmentMatrix, trellis: &Trellis, cfg: &DecoderOnlyConfig) -> Result<DecoderOnlyReport, ExperimentError> {
    let (n, m) = (a.clients(), a.groups());
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let flagged = (0..1u64 << m)
        .map(|t| Ok(flagged_masks(&decode(trellis, SyndromeVector::from_mask(m, t)?, &cfg.decoder)?, &cfg.thresholds)))
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let p = cfg.true_crossover;
    let channel: Vec<f64> = (0..=m).map(|h| p.powi(h as i32) * (1.0 - p).powi((m - h) as i32)).collect();
    let columns = a.column_masks();
    let k = cfg.thresholds.len();
    let (mut md, mut fa) = (vec![0.0; k], vec![0.0; k]);
    let mut placements = 0u64;
    for_each_subset(n, cfg.n_malicious, |d| {
        placements += 1;
        let s = (0..n).filter(|&j| d >> j & 1 == 1).fold(0u64, |acc, j| acc | columns[j]);
        for (t, masks) in flagged.iter().enumerate() {
            let w = channel[(t as u64 ^ s).count_ones() as usize];
            if w == 0.0 {
                continue;
            }
            for (i, &f) in masks.iter().enumerate() {
                md[i] += w * (d & !f).count_ones() as f64;
                fa[i] += w * (f & !d & all).count_ones() as f64;
            }
        }
    });
    let scale = 1.0 / placements as f64;
    md.iter_mut().chain(fa.iter_mut()).for_each(|v| *v *= scale);
    Ok(DecoderOnlyReport {
        exhaustive: true,
        evaluations: placements << m,
        rows: rows_from_totals(n, cfg.n_malicious, &cfg.thresholds, &md, &fa),
    })
}

fn sampled(a: &AssignmentMatrix, trellis: &Trellis, cfg: &DecoderOnlyConfig) -> Result<DecoderOnlyReport, ExperimentError> {
    let (n, m) = (a.clients(), a.groups());
    let mut rng = rng_from_seed(cfg.seed);
    let mut cache: HashMap<u64, Vec<u64>> = HashMap::new();
    let k = cfg.thresholds.len();
    let (mut md, mut fa) = (vec![0.0; k], vec![0.0; k]);
    let trials = cfg.trials.max(1);
    for _ in 0..trials {
        let d = sample(&mut rng, n, cfg.n_malicious).iter().fold(0u64, |acc, j| acc | 1 << j);
        let s = (0..n).filter(|&j| d >> j & 1 == 1).fold(0u64, |acc, j| acc | a.column_mask(j));
        let t = flip_bits(&SyndromeVector::from_mask(m, s)?, cfg.true_crossover, &mut rng);
        let flagged = match cache.entry(t.mask()) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(flagged_masks(&decode(trellis, t, &cfg.decoder)?, &cfg.thresholds)),
        };
        for (i, &f) in flagged.iter().enumerate() {
            md[i] += (d & !f).count_ones() as f64;
            fa[i] += (f & !d).count_ones() as f64;
        }
    }
    md.iter_mut().chain(fa.iter_mut()).for_each(|v| *v /= trials as f64);
    Ok(DecoderOnlyReport {
        exhaustive: false,
        evaluations: trials as u64,
        rows: rows_from_totals(n, cfg.n_malicious, &cfg.thresholds, &md, &fa),
    })
}
