use serde::{Deserialize, Serialize};

use super::FlError;

/// Labeled examples with dense `f32` features, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_features: usize,
    n_classes: usize,
    features: Vec<f32>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(n_features: usize, n_classes: usize, features: Vec<f32>, labels: Vec<usize>) -> Result<Self, FlError> {
        if features.len() != labels.len() * n_features {
            return Err(FlError::DimensionMismatch { expected: labels.len() * n_features, actual: features.len() });
        }
        if let Some(&class) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(FlError::InvalidClass { class, n_classes });
        }
        Ok(Self { n_features, n_classes, features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn features(&self, i: usize) -> &[f32] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Examples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            features.extend_from_slice(self.features(i));
        }
        Dataset {
            n_features: self.n_features,
            n_classes: self.n_classes,
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    fn relabeled(&self, f: impl Fn(usize) -> usize) -> Dataset {
        Dataset {
            labels: self.labels.iter().map(|&l| f(l)).collect(),
            ..self.clone()
        }
    }
}

/// Data-poisoning behavior of a client.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Attack {
    None,
    /// Targeted: every `source` label becomes `target`.
    LabelFlip { source: usize, target: usize },
    /// Untargeted: every label `l` becomes `(l + 1) mod n_classes`.
    LabelPermutation,
}

impl Attack {
    /// Source/target pair whose confusion is reported as attack accuracy.
    ///
    /// For a label flip this is the attacked pair; otherwise class 1 and the
    /// class it is shifted into.
    pub fn tracked_pair(&self, n_classes: usize) -> (usize, usize) {
        match *self {
            Attack::LabelFlip { source, target } => (source, target),
            Attack::None | Attack::LabelPermutation => {
                let source = 1.min(n_classes.saturating_sub(1));
                (source, (source + 1) % n_classes.max(1))
            }
        }
    }

    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset, FlError> {
        match *self {
            Attack::None => Ok(dataset.clone()),
            Attack::LabelFlip { source, target } => apply_label_flip(dataset, source, target),
            Attack::LabelPermutation => apply_label_permutation(dataset),
        }
    }
}

pub fn apply_label_flip(dataset: &Dataset, source: usize, target: usize) -> Result<Dataset, FlError> {
    let n_classes = dataset.n_classes();
    for class in [source, target] {
        if class >= n_classes {
            return Err(FlError::InvalidClass { class, n_classes });
        }
    }
    if source == target {
        return Err(FlError::InvalidClass { class: target, n_classes });
    }
    Ok(dataset.relabeled(|l| if l == source { target } else { l }))
}

/// Shifts every label by one, modulo the dataset's class count.
pub fn apply_label_permutation(dataset: &Dataset) -> Result<Dataset, FlError> {
    let n_classes = dataset.n_classes();
    if n_classes < 2 {
        return Err(FlError::InvalidClass { class: 1, n_classes });
    }
    Ok(dataset.relabeled(|l| (l + 1) % n_classes))
}

/// A client's local data (already poisoned if malicious) and its role.
#[derive(Debug, Clone)]
pub struct ClientState {
    pub dataset: Dataset,
    pub is_malicious: bool,
    pub attack: Attack,
}

impl ClientState {
    pub fn benign(dataset: Dataset) -> Self {
        Self { dataset, is_malicious: false, attack: Attack::None }
    }

    /// Poisons `dataset` with `attack` and marks the client malicious.
    pub fn malicious(dataset: &Dataset, attack: Attack) -> Result<Self, FlError> {
        Ok(Self { dataset: attack.apply(dataset)?, is_malicious: true, attack })
    }
}
