use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{ClientState, Dataset, FlError};
use crate::rng::rng_from_seed;

/// Multiclass softmax regression. Row `c` of the weight table holds the
/// `n_features` feature weights of class `c` followed by its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    n_classes: usize,
    n_features: usize,
    weights: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(n_classes: usize, n_features: usize) -> Self {
        Self { n_classes, n_features, weights: vec![0.0; n_classes * (n_features + 1)] }
    }

    pub fn from_weights(n_classes: usize, n_features: usize, weights: Vec<f64>) -> Result<Self, FlError> {
        let expected = n_classes * (n_features + 1);
        if weights.len() != expected {
            return Err(FlError::DimensionMismatch { expected, actual: weights.len() });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(FlError::NonFiniteLoss);
        }
        Ok(Self { n_classes, n_features, weights })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    fn row(&self, c: usize) -> &[f64] {
        let w = self.n_features + 1;
        &self.weights[c * w..(c + 1) * w]
    }

    fn logits_into(&self, x: &[f32], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            let row = self.row(c);
            let dot: f64 = row[..self.n_features].iter().zip(x).map(|(&w, &xi)| w * xi as f64).sum();
            *o = dot + row[self.n_features];
        }
    }

    /// Most likely class; ties go to the lowest index.
    pub fn predict(&self, x: &[f32]) -> usize {
        let mut logits = vec![0.0; self.n_classes];
        self.logits_into(x, &mut logits);
        argmax(&logits)
    }

    fn check_dataset(&self, ds: &Dataset) -> Result<(), FlError> {
        if ds.n_features() != self.n_features {
            return Err(FlError::DimensionMismatch { expected: self.n_features, actual: ds.n_features() });
        }
        if ds.n_classes() != self.n_classes {
            return Err(FlError::DimensionMismatch { expected: self.n_classes, actual: ds.n_classes() });
        }
        Ok(())
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Turns logits into probabilities in place and returns `log Σ exp`.
fn softmax_in_place(logits: &mut [f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for z in logits.iter_mut() {
        *z = (*z - max).exp();
        sum += *z;
    }
    for z in logits.iter_mut() {
        *z /= sum;
    }
    max + sum.ln()
}

/// Mean cross-entropy over the examples at `indices` and its gradient with
/// respect to the flat weight vector.
pub fn loss_and_gradient(model: &ModelParams, ds: &Dataset, indices: &[usize]) -> Result<(f64, Vec<f64>), FlError> {
    let mut grad = vec![0.0; model.weights.len()];
    let loss = accumulate_gradient(model, ds, indices, &mut grad)?;
    Ok((loss, grad))
}

fn accumulate_gradient(model: &ModelParams, ds: &Dataset, indices: &[usize], grad: &mut [f64]) -> Result<f64, FlError> {
    model.check_dataset(ds)?;
    if indices.is_empty() {
        return Err(FlError::EmptyDataset);
    }
    grad.iter_mut().for_each(|g| *g = 0.0);
    let f = model.n_features;
    let scale = 1.0 / indices.len() as f64;
    let mut probs = vec![0.0; model.n_classes];
    let mut loss = 0.0;
    for &i in indices {
        let x = ds.features(i);
        let y = ds.label(i);
        model.logits_into(x, &mut probs);
        let true_logit = probs[y];
        loss += softmax_in_place(&mut probs) - true_logit;
        for (c, &p) in probs.iter().enumerate() {
            let err = (p - if c == y { 1.0 } else { 0.0 }) * scale;
            if err == 0.0 {
                continue;
            }
            let row = &mut grad[c * (f + 1)..(c + 1) * (f + 1)];
            for (g, &xi) in row[..f].iter_mut().zip(x) {
                *g += err * xi as f64;
            }
            row[f] += err;
        }
    }
    Ok(loss * scale)
}

/// Local optimization settings and the length of the training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub local_epochs: usize,
    pub rounds: usize,
    /// 1-based round at which group testing runs.
    pub test_round: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self { learning_rate: 0.01, batch_size: 64, local_epochs: 1, rounds: 10, test_round: 1 }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), FlError> {
        let bad = |msg: &str| Err(FlError::InvalidHyperparams(msg.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning_rate must be finite and non-negative");
        }
        if self.batch_size == 0 || self.local_epochs == 0 || self.rounds == 0 {
            return bad("batch_size, local_epochs and rounds must be positive");
        }
        if self.test_round == 0 || self.test_round > self.rounds {
            return bad("test_round must be in 1..=rounds");
        }
        Ok(())
    }
}

/// Minibatch SGD on the client's (possibly poisoned) data, starting from
/// `global`. The example order is reshuffled every epoch from `seed`.
pub fn local_train(global: &ModelParams, client: &ClientState, hp: &Hyperparams, seed: u64) -> Result<ModelParams, FlError> {
    let ds = &client.dataset;
    global.check_dataset(ds)?;
    let mut model = global.clone();
    if ds.is_empty() {
        return Ok(model);
    }
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut grad = vec![0.0; model.weights.len()];
    for _ in 0..hp.local_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hp.batch_size.max(1)) {
            let loss = accumulate_gradient(&model, ds, batch, &mut grad)?;
            if !loss.is_finite() {
                return Err(FlError::NonFiniteLoss);
            }
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                *w -= hp.learning_rate * g;
            }
        }
    }
    if model.weights.iter().any(|w| !w.is_finite()) {
        return Err(FlError::NonFiniteLoss);
    }
    Ok(model)
}

/// Rate computed from argmax predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Metric {
    Top1,
    /// Fraction of `source` examples predicted as `target`.
    AttackAcc { source: usize, target: usize },
    /// Fraction of `source` examples predicted correctly.
    SourceRecall { source: usize },
    /// Mean per-class recall over the classes present.
    Balanced,
}

pub fn evaluate(model: &ModelParams, ds: &Dataset, metric: Metric) -> Result<f64, FlError> {
    model.check_dataset(ds)?;
    if ds.is_empty() {
        return Err(FlError::EmptyDataset);
    }
    let predictions: Vec<usize> = (0..ds.len()).map(|i| model.predict(ds.features(i))).collect();
    let labels = ds.labels();
    let rate_within = |class: usize, predicted: usize| -> Result<f64, FlError> {
        let (hits, total) = labels
            .iter()
            .zip(&predictions)
            .filter(|(&l, _)| l == class)
            .fold((0usize, 0usize), |(h, t), (_, &p)| (h + usize::from(p == predicted), t + 1));
        if total == 0 {
            return Err(FlError::EmptySourceClass(class));
        }
        Ok(hits as f64 / total as f64)
    };
    match metric {
        Metric::Top1 => {
            let hits = labels.iter().zip(&predictions).filter(|(l, p)| l == p).count();
            Ok(hits as f64 / ds.len() as f64)
        }
        Metric::AttackAcc { source, target } => rate_within(source, target),
        Metric::SourceRecall { source } => rate_within(source, source),
        Metric::Balanced => {
            let recalls: Vec<f64> = (0..ds.n_classes()).filter_map(|c| rate_within(c, c).ok()).collect();
            Ok(recalls.iter().sum::<f64>() / recalls.len() as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn dataset(features: Vec<f32>, labels: Vec<usize>, n_features: usize, n_classes: usize) -> Dataset {
        Dataset::new(n_features, n_classes, features, labels).unwrap()
    }

    /// Model whose class-c logit is `logit(c, x)`, built from a bias vector.
    fn biased(biases: &[f64], n_features: usize) -> ModelParams {
        let mut m = ModelParams::zeros(biases.len(), n_features);
        for (c, &b) in biases.iter().enumerate() {
            m.weights[c * (n_features + 1) + n_features] = b;
        }
        m
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let ds = dataset(vec![0.5, -1.0, 2.0, 0.1], vec![0, 1], 2, 3);
        let mut rng = rng_from_seed(1);
        let w: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = ModelParams::from_weights(3, 2, w).unwrap();
        let hp = Hyperparams { learning_rate: 0.0, batch_size: 1, ..Default::default() };
        let out = local_train(&model, &ClientState::benign(ds), &hp, 7).unwrap();
        assert_eq!(out, model);
    }

    #[test]
    fn single_step_matches_gradient() {
        let ds = dataset(vec![0.3, -0.7], vec![2], 2, 3);
        let model = ModelParams::from_weights(3, 2, (0..9).map(|k| 0.1 * k as f64 - 0.4).collect()).unwrap();
        let hp = Hyperparams { learning_rate: 0.5, batch_size: 1, ..Default::default() };
        let (_, grad) = loss_and_gradient(&model, &ds, &[0]).unwrap();
        let out = local_train(&model, &ClientState::benign(ds), &hp, 0).unwrap();
        for ((o, w), g) in out.weights().iter().zip(model.weights()).zip(&grad) {
            assert!((o - (w - 0.5 * g)).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_checks() {
        let ds = dataset(vec![0.0; 3], vec![0], 3, 2);
        let model = ModelParams::zeros(2, 2);
        let hp = Hyperparams::default();
        assert!(matches!(
            local_train(&model, &ClientState::benign(ds.clone()), &hp, 0),
            Err(FlError::DimensionMismatch { .. })
        ));
        assert!(evaluate(&model, &ds, Metric::Top1).is_err());
    }

    #[test]
    fn diverging_training_reports_non_finite_loss() {
        let ds = dataset(vec![1e10, -1e10], vec![0, 1], 1, 2);
        let hp = Hyperparams { learning_rate: 1e300, batch_size: 1, local_epochs: 3, ..Default::default() };
        let r = local_train(&ModelParams::zeros(2, 1), &ClientState::benign(ds), &hp, 0);
        assert!(matches!(r, Err(FlError::NonFiniteLoss)));
    }

    #[test]
    fn training_is_seed_deterministic() {
        let mut rng = rng_from_seed(5);
        let labels: Vec<usize> = (0..50).map(|_| rng.random_range(0..3)).collect();
        let features: Vec<f32> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
        let client = ClientState::benign(dataset(features, labels, 2, 3));
        let hp = Hyperparams { learning_rate: 0.1, batch_size: 8, local_epochs: 2, ..Default::default() };
        let m = ModelParams::zeros(3, 2);
        assert_eq!(local_train(&m, &client, &hp, 11).unwrap(), local_train(&m, &client, &hp, 11).unwrap());
        assert_ne!(local_train(&m, &client, &hp, 11).unwrap(), local_train(&m, &client, &hp, 12).unwrap());
    }

    #[test]
    fn metric_examples() {
        let labels: Vec<usize> = (0..10).collect();
        let ds = dataset(vec![0.0; 10], labels, 1, 10);
        let class0 = biased(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 1);
        assert_eq!(evaluate(&class0, &ds, Metric::Top1).unwrap(), 0.1);
        assert_eq!(evaluate(&class0, &ds, Metric::Balanced).unwrap(), 0.1);

        let ds = dataset(vec![0.0; 3], vec![1, 1, 2], 1, 10);
        let class7 = biased(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0], 1);
        assert_eq!(evaluate(&class7, &ds, Metric::AttackAcc { source: 1, target: 7 }).unwrap(), 1.0);
        assert_eq!(evaluate(&class7, &ds, Metric::SourceRecall { source: 1 }).unwrap(), 0.0);
        assert!(matches!(
            evaluate(&class7, &ds, Metric::SourceRecall { source: 4 }),
            Err(FlError::EmptySourceClass(4))
        ));
    }

    #[test]
    fn perfect_predictions() {
        // one-hot features and identity weights predict the label exactly
        let ds = dataset(vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0], vec![0, 1, 2, 0], 3, 3);
        let mut m = ModelParams::zeros(3, 3);
        for c in 0..3 {
            m.weights[c * 4 + c] = 1.0;
        }
        assert_eq!(evaluate(&m, &ds, Metric::Top1).unwrap(), 1.0);
        assert_eq!(evaluate(&m, &ds, Metric::Balanced).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(
            seed in any::<u64>(),
            n_classes in 2usize..5,
            n_features in 1usize..5,
            n_examples in 1usize..6,
        ) {
            let mut rng = rng_from_seed(seed);
            let labels: Vec<usize> = (0..n_examples).map(|_| rng.random_range(0..n_classes)).collect();
            let features: Vec<f32> = (0..n_examples * n_features).map(|_| rng.random_range(-2.0..2.0)).collect();
            let ds = dataset(features, labels, n_features, n_classes);
            let w: Vec<f64> = (0..n_classes * (n_features + 1)).map(|_| rng.random_range(-1.0..1.0)).collect();
            let model = ModelParams::from_weights(n_classes, n_features, w).unwrap();
            let idx: Vec<usize> = (0..n_examples).collect();
            let (_, grad) = loss_and_gradient(&model, &ds, &idx).unwrap();
            let h = 1e-5;
            for k in 0..grad.len() {
                let mut plus = model.clone();
                plus.weights[k] += h;
                let mut minus = model.clone();
                minus.weights[k] -= h;
                let fd = (loss_and_gradient(&plus, &ds, &idx).unwrap().0 - loss_and_gradient(&minus, &ds, &idx).unwrap().0) / (2.0 * h);
                let scale = grad[k].abs().max(fd.abs()).max(1e-3);
                prop_assert!((grad[k] - fd).abs() <= 1e-5 * scale, "k={} analytic={} fd={}", k, grad[k], fd);
            }
        }
    }
}
