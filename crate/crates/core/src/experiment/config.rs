use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::codes::{AssignmentMatrix, Preset};
use crate::decoder::DecoderConfig;
use crate::flsim::{Attack, Hyperparams, ProtocolConfig, Strategy, SyntheticSpec};
use crate::group_test::DEFAULT_RHO;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    None,
    LabelFlip,
    LabelPermutation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Synthetic,
    Mnist,
}

/// One experiment, read from a flat JSON object. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Preset,
    /// Text matrix file; takes precedence over `preset`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix_file: Option<PathBuf>,
    pub n: usize,
    pub n_malicious: usize,

    pub attack: AttackKind,
    pub source_label: usize,
    pub target_label: usize,

    /// Decoder prior; `None` uses `n_malicious / n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prevalence: Option<f64>,
    /// Decoder's assumed test crossover probability.
    pub crossover: f64,
    /// LLR thresholds to sweep.
    pub thresholds: Vec<f64>,
    /// Crossover probability of the simulated noise on test outcomes.
    pub test_noise: f64,
    pub rho: f64,

    pub learning_rate: f64,
    pub batch_size: usize,
    pub local_epochs: usize,
    pub rounds: usize,
    pub test_round: usize,

    pub strategies: Vec<Strategy>,
    pub trials: usize,
    pub master_seed: u64,

    pub dataset: DatasetKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mnist_dir: Option<PathBuf>,
    pub validation_size: usize,
    pub n_classes: usize,
    pub n_features: usize,
    pub samples_per_client: usize,
    pub cluster_separation: f64,
    pub test_size: usize,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let hp = Hyperparams::default();
        let synthetic = SyntheticSpec::default();
        Self {
            preset: Preset::Bch15_7,
            matrix_file: None,
            n: 15,
            n_malicious: 0,
            attack: AttackKind::LabelFlip,
            source_label: 1,
            target_label: 7,
            prevalence: None,
            crossover: 0.05,
            thresholds: vec![0.9],
            test_noise: 0.0,
            rho: DEFAULT_RHO,
            learning_rate: hp.learning_rate,
            batch_size: hp.batch_size,
            local_epochs: hp.local_epochs,
            rounds: hp.rounds,
            test_round: hp.test_round,
            strategies: Strategy::ALL.to_vec(),
            trials: 1,
            master_seed: 0,
            dataset: DatasetKind::Synthetic,
            mnist_dir: None,
            validation_size: synthetic.validation_size,
            n_classes: synthetic.n_classes,
            n_features: synthetic.n_features,
            samples_per_client: synthetic.samples_per_client,
            cluster_separation: synthetic.cluster_separation,
            test_size: synthetic.test_size,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Config(format!("invalid config: {e}")))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn matrix(&self) -> Result<AssignmentMatrix, ExperimentError> {
        match &self.matrix_file {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))?;
                Ok(text.parse()?)
            }
            None => Ok(self.preset.matrix()?),
        }
    }

    pub fn attack(&self) -> Attack {
        match self.attack {
            AttackKind::None => Attack::None,
            AttackKind::LabelFlip => Attack::LabelFlip { source: self.source_label, target: self.target_label },
            AttackKind::LabelPermutation => Attack::LabelPermutation,
        }
    }

    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            local_epochs: self.local_epochs,
            rounds: self.rounds,
            test_round: self.test_round,
        }
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            n_classes: self.n_classes,
            n_features: self.n_features,
            samples_per_client: self.samples_per_client,
            cluster_separation: self.cluster_separation,
            validation_size: self.validation_size,
            test_size: self.test_size,
        }
    }

    /// Decoder settings at threshold `lambda`.
    pub fn decoder(&self, lambda: f64) -> Result<DecoderConfig, ExperimentError> {
        let cfg = match self.prevalence {
            Some(delta) => DecoderConfig::new(delta, self.crossover, lambda)?,
            None => DecoderConfig::frequentist(self.n, self.n_malicious, self.crossover, lambda)?,
        };
        Ok(cfg)
    }

    pub fn protocol(&self, lambda: f64) -> Result<ProtocolConfig, ExperimentError> {
        let mut cfg = ProtocolConfig::new(self.hyperparams(), self.decoder(lambda)?);
        cfg.rho = self.rho;
        cfg.test_noise = self.test_noise;
        Ok(cfg)
    }

    /// Checks every constraint that does not need the data on disk.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        let a = self.matrix()?;
        if a.clients() != self.n {
            return bad(format!("n = {} but the matrix has {} columns", self.n, a.clients()));
        }
        if self.n_malicious > self.n {
            return bad(format!("n_malicious = {} exceeds n = {}", self.n_malicious, self.n));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.thresholds.is_empty() {
            return bad("thresholds must not be empty".into());
        }
        if self.strategies.is_empty() {
            return bad("strategies must not be empty".into());
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad(format!("rho = {} not in [0, 1]", self.rho));
        }
        if !(0.0..=1.0).contains(&self.test_noise) {
            return bad(format!("test_noise = {} not in [0, 1]", self.test_noise));
        }
        for &lambda in &self.thresholds {
            self.decoder(lambda)?;
        }
        self.hyperparams().validate()?;
        if self.attack == AttackKind::LabelFlip {
            let classes = match self.dataset {
                DatasetKind::Synthetic => self.n_classes,
                DatasetKind::Mnist => 10,
            };
            if self.source_label >= classes || self.target_label >= classes || self.source_label == self.target_label {
                return bad(format!(
                    "label flip {} -> {} is not valid for {classes} classes",
                    self.source_label, self.target_label
                ));
            }
        }
        if self.dataset == DatasetKind::Mnist && self.mnist_dir.is_none() {
            return bad("dataset = mnist requires mnist_dir".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_partial_json() {
        let cfg = ExperimentConfig::from_json(r#"{"n_malicious": 3, "strategies": ["oracle"], "thresholds": [0.1, 0.5]}"#).unwrap();
        assert_eq!(cfg.n_malicious, 3);
        assert_eq!(cfg.strategies, vec![Strategy::Oracle]);
        assert_eq!(cfg.n, 15);
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"preset": "bch99"}"#).is_err());
    }

    #[test]
    fn json_round_trip_is_idempotent() {
        let cfg = ExperimentConfig::from_json(r#"{"preset": "cyclic15_9", "prevalence": 0.2, "mnist_dir": "/data"}"#).unwrap();
        let once = cfg.to_json();
        let again = ExperimentConfig::from_json(&once).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_json(), once);
    }

    #[test]
    fn validation_failures() {
        let check = |json: &str| ExperimentConfig::from_json(json).unwrap().validate().is_err();
        assert!(check(r#"{"n": 14}"#));
        assert!(check(r#"{"trials": 0}"#));
        assert!(check(r#"{"thresholds": []}"#));
        assert!(check(r#"{"n_malicious": 16}"#));
        assert!(check(r#"{"test_round": 11}"#));
        assert!(check(r#"{"crossover": 0.6}"#));
        assert!(check(r#"{"dataset": "mnist"}"#));
        assert!(check(r#"{"source_label": 7}"#));
        assert!(!check(r#"{"preset": "identity(4)", "n": 4}"#));
    }

    #[test]
    fn frequentist_prior() {
        let cfg = ExperimentConfig { n_malicious: 3, ..Default::default() };
        assert!((cfg.decoder(0.9).unwrap().prevalence() - 0.2).abs() < 1e-15);
        let cfg = ExperimentConfig { prevalence: Some(0.35), ..cfg };
        assert_eq!(cfg.decoder(0.9).unwrap().prevalence(), 0.35);
    }
}
