//! A-posteriori LLRs of the defective vector and the threshold decision.
//!
//! The test channel is a memoryless BSC with crossover `p`; each client is a
//! priori malicious with probability `delta`. [`forward_backward`] runs the
//! forward-backward recursions on the trellis in the linear domain with
//! per-layer normalization. [`brute_force_posterior`] sums the same posterior
//! over all `2^n` defective vectors and serves as a reference.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{AssignmentMatrix, DefectiveVector, SyndromeVector};
use crate::trellis::Trellis;

/// Magnitude at which LLRs are clamped; zero-probability hypotheses
/// (noiseless tests) map to `+-LLR_MAX` instead of infinity.
pub const LLR_MAX: f64 = 50.0;

/// Largest client count accepted by [`brute_force_posterior`].
pub const MAX_BRUTE_FORCE_CLIENTS: usize = 20;

/// Prevalence used when the number of malicious clients is zero.
pub const DEFAULT_PREVALENCE: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("test vector has zero probability under every defective vector")]
    AllPathsZeroProbability,
    #[error("brute-force posterior over {0} clients exceeds the limit of {MAX_BRUTE_FORCE_CLIENTS}")]
    InputTooLarge(usize),
    #[error("invalid decoder configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    prevalence: f64,
    crossover: f64,
    threshold: f64,
}

impl DecoderConfig {
    /// Validates `0 < prevalence < 1`, `0 <= crossover < 0.5` and a finite threshold.
    pub fn new(prevalence: f64, crossover: f64, threshold: f64) -> Result<Self, DecodeError> {
        if !(prevalence > 0.0 && prevalence < 1.0) {
            return Err(DecodeError::InvalidConfig(format!("prevalence {prevalence} not in (0, 1)")));
        }
        if !(0.0..0.5).contains(&crossover) {
            return Err(DecodeError::InvalidConfig(format!("crossover {crossover} not in [0, 0.5)")));
        }
        if !threshold.is_finite() {
            return Err(DecodeError::InvalidConfig(format!("threshold {threshold} is not finite")));
        }
        Ok(Self { prevalence, crossover, threshold })
    }

    /// `delta = n_m / n`, or [`DEFAULT_PREVALENCE`] when `n_m = 0`.
    pub fn frequentist(n: usize, malicious: usize, crossover: f64, threshold: f64) -> Result<Self, DecodeError> {
        let prevalence = if malicious == 0 || n == 0 {
            DEFAULT_PREVALENCE
        } else {
            malicious as f64 / n as f64
        };
        Self::new(prevalence, crossover, threshold)
    }

    pub fn with_threshold(self, threshold: f64) -> Result<Self, DecodeError> {
        Self::new(self.prevalence, self.crossover, threshold)
    }

    pub fn prevalence(&self) -> f64 {
        self.prevalence
    }

    pub fn crossover(&self) -> f64 {
        self.crossover
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// Per-client `log Pr(d_i = 0 | t) - log Pr(d_i = 1 | t)`, clamped to `+-LLR_MAX`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlrVector(Vec<f64>);

impl LlrVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values.into_iter().map(clamp_llr).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn clamp_llr(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-LLR_MAX, LLR_MAX)
    }
}

/// LLR from the unnormalized masses of the `d_i = 0` and `d_i = 1` hypotheses.
fn llr_from_masses(benign: f64, malicious: f64) -> Result<f64, DecodeError> {
    match (benign > 0.0, malicious > 0.0) {
        (false, false) => Err(DecodeError::AllPathsZeroProbability),
        (true, false) => Ok(LLR_MAX),
        (false, true) => Ok(-LLR_MAX),
        (true, true) => Ok(clamp_llr(benign.ln() - malicious.ln())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub d_hat: DefectiveVector,
    /// Every client was flagged; the caller should continue without a defense.
    pub fallback_no_defense: bool,
}

impl Decision {
    /// Clients to exclude from aggregation: the flagged set, or nobody on fallback.
    pub fn excluded(&self) -> Vec<usize> {
        if self.fallback_no_defense {
            Vec::new()
        } else {
            self.d_hat.support()
        }
    }
}

/// `Q(t | s)` for a memoryless BSC with crossover `p`.
pub fn test_likelihood(t: &SyndromeVector, s: &SyndromeVector, p: f64) -> Result<f64, DecodeError> {
    let flips = t
        .distance(s)
        .map_err(|_| DecodeError::DimensionMismatch { expected: t.len(), actual: s.len() })?;
    Ok(bsc_likelihood(t.len(), flips, p))
}

fn bsc_likelihood(len: usize, flips: usize, p: f64) -> f64 {
    p.powi(flips as i32) * (1.0 - p).powi((len - flips) as i32)
}

fn normalize(values: &mut [f64]) -> Result<(), DecodeError> {
    let sum: f64 = values.iter().sum();
    if sum <= 0.0 || !sum.is_finite() {
        return Err(DecodeError::AllPathsZeroProbability);
    }
    values.iter_mut().for_each(|v| *v /= sum);
    Ok(())
}

/// A-posteriori LLRs of every client given test outcomes `t`.
pub fn forward_backward(trellis: &Trellis, t: &SyndromeVector, cfg: &DecoderConfig) -> Result<LlrVector, DecodeError> {
    let n = trellis.clients();
    let m = trellis.groups();
    if t.len() != m {
        return Err(DecodeError::DimensionMismatch { expected: m, actual: t.len() });
    }
    let gamma = [1.0 - cfg.prevalence, cfg.prevalence];

    let mut alpha: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    alpha.push(vec![1.0]);
    for layer in 1..=n {
        let prev = &alpha[layer - 1];
        let mut next = vec![0.0; trellis.states(layer).len()];
        for (label, g) in gamma.iter().enumerate() {
            for e in trellis.edges(layer, label == 1) {
                next[e.to] += prev[e.from] * g;
            }
        }
        normalize(&mut next)?;
        alpha.push(next);
    }

    let mut beta: Vec<f64> = trellis
        .states(n)
        .iter()
        .map(|&s| bsc_likelihood(m, (s ^ t.mask()).count_ones() as usize, cfg.crossover))
        .collect();
    normalize(&mut beta)?;

    let mut llrs = vec![0.0; n];
    for layer in (1..=n).rev() {
        let prev_alpha = &alpha[layer - 1];
        let mut mass = [0.0; 2];
        let mut prev_beta = vec![0.0; trellis.states(layer - 1).len()];
        for (label, g) in gamma.iter().enumerate() {
            for e in trellis.edges(layer, label == 1) {
                let through = g * beta[e.to];
                mass[label] += prev_alpha[e.from] * through;
                prev_beta[e.from] += through;
            }
        }
        llrs[layer - 1] = llr_from_masses(mass[0], mass[1])?;
        normalize(&mut prev_beta)?;
        beta = prev_beta;
    }
    share_among_identical_columns(trellis, &mut llrs);
    Ok(LlrVector(llrs))
}

/// Clients with the same column are exchangeable under an i.i.d. prior, so
/// their posteriors coincide; report the first one's LLR for the whole class
/// so the equality also holds bit for bit.
fn share_among_identical_columns(trellis: &Trellis, llrs: &mut [f64]) {
    let mut first: HashMap<u64, f64> = HashMap::new();
    for (client, llr) in llrs.iter_mut().enumerate() {
        *llr = *first.entry(trellis.column_mask(client)).or_insert(*llr);
    }
}

/// Exact a-posteriori LLRs by summing over all `2^n` defective vectors.
pub fn brute_force_posterior(
    a: &AssignmentMatrix,
    t: &SyndromeVector,
    cfg: &DecoderConfig,
) -> Result<LlrVector, DecodeError> {
    let n = a.clients();
    let m = a.groups();
    if n > MAX_BRUTE_FORCE_CLIENTS {
        return Err(DecodeError::InputTooLarge(n));
    }
    if t.len() != m {
        return Err(DecodeError::DimensionMismatch { expected: m, actual: t.len() });
    }
    let delta = cfg.prevalence;
    let prior: Vec<f64> = (0..=n).map(|w| delta.powi(w as i32) * (1.0 - delta).powi((n - w) as i32)).collect();
    let channel: Vec<f64> = (0..=m).map(|k| bsc_likelihood(m, k, cfg.crossover)).collect();

    let cols = a.column_masks();
    let total = 1usize << n;
    let mut syndromes = vec![0u64; total];
    let mut benign = vec![0.0; n];
    let mut malicious = vec![0.0; n];
    for d in 0..total {
        if d > 0 {
            let low = d.trailing_zeros() as usize;
            syndromes[d] = syndromes[d & (d - 1)] | cols[low];
        }
        let flips = (syndromes[d] ^ t.mask()).count_ones() as usize;
        let weight = prior[d.count_ones() as usize] * channel[flips];
        for i in 0..n {
            if d >> i & 1 == 1 {
                malicious[i] += weight;
            } else {
                benign[i] += weight;
            }
        }
    }
    let llrs = benign
        .iter()
        .zip(&malicious)
        .map(|(&b, &mal)| llr_from_masses(b, mal))
        .collect::<Result<_, _>>()?;
    Ok(LlrVector(llrs))
}

/// Flags client `i` when its LLR is below `threshold`; ties count as benign.
pub fn decide(llr: &LlrVector, threshold: f64) -> Decision {
    let d_hat = DefectiveVector::new(llr.values().iter().map(|&l| l < threshold).collect());
    let fallback_no_defense = !d_hat.is_empty() && d_hat.weight() == d_hat.len();
    Decision { d_hat, fallback_no_defense }
}
