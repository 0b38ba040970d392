use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Attack, ClientState, Dataset, Federation, FlError, MnistData};
use crate::rng::{derive_seed, rng_from_seed, SimRng};

const DATA_STREAM: u64 = 1;
const MALICIOUS_STREAM: u64 = 2;

/// Gaussian-cluster data shared i.i.d. across clients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub n_features: usize,
    pub samples_per_client: usize,
    /// Distance between any two class means, in units of the per-coordinate
    /// standard deviation.
    pub cluster_separation: f64,
    pub validation_size: usize,
    pub test_size: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_classes: 10,
            n_features: 20,
            samples_per_client: 200,
            cluster_separation: 6.0,
            validation_size: 100,
            test_size: 2000,
        }
    }
}

/// Clients `0..n` in an order fixed by `master_seed` alone; the malicious set
/// for `n_m` is the sorted first `n_m` entries, so sets grow by nesting.
pub fn nested_malicious_set(n: usize, n_m: usize, master_seed: u64) -> Result<Vec<usize>, FlError> {
    if n_m > n {
        return Err(FlError::InvalidCounts(format!("n_m = {n_m} exceeds n = {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(derive_seed(master_seed, MALICIOUS_STREAM)));
    let mut chosen = order[..n_m].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

fn build_clients(shards: Vec<Dataset>, malicious: &[usize], attack: Attack) -> Result<Vec<ClientState>, FlError> {
    shards
        .into_iter()
        .enumerate()
        .map(|(j, ds)| {
            if malicious.binary_search(&j).is_ok() {
                ClientState::malicious(&ds, attack)
            } else {
                Ok(ClientState::benign(ds))
            }
        })
        .collect()
}

fn sample_clusters(spec: &SyntheticSpec, count: usize, rng: &mut SimRng) -> Result<Dataset, FlError> {
    let scale = spec.cluster_separation / std::f64::consts::SQRT_2;
    let mut features = Vec::with_capacity(count * spec.n_features);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let label = rng.random_range(0..spec.n_classes);
        for f in 0..spec.n_features {
            let noise: f64 = rng.sample(StandardNormal);
            let mean = if f == label { scale } else { 0.0 };
            features.push((mean + noise) as f32);
        }
        labels.push(label);
    }
    Dataset::new(spec.n_features, spec.n_classes, features, labels)
}

/// Class `c` is centered at `separation / √2 · e_c`, unit variance in every
/// coordinate, so all class means are `separation` apart.
pub fn make_synthetic_federation(
    n: usize,
    n_m: usize,
    spec: &SyntheticSpec,
    attack: Attack,
    master_seed: u64,
) -> Result<Federation, FlError> {
    if n == 0 {
        return Err(FlError::InvalidCounts("no clients".into()));
    }
    if spec.n_classes < 2 || spec.n_features < spec.n_classes {
        return Err(FlError::InvalidCounts(format!(
            "need at least 2 classes and n_features >= n_classes, got {} and {}",
            spec.n_classes, spec.n_features
        )));
    }
    if spec.samples_per_client == 0 || spec.validation_size == 0 || spec.test_size == 0 {
        return Err(FlError::InvalidCounts("sample counts must be positive".into()));
    }
    let malicious = nested_malicious_set(n, n_m, master_seed)?;
    let mut rng = rng_from_seed(derive_seed(master_seed, DATA_STREAM));
    let shards = (0..n)
        .map(|_| sample_clusters(spec, spec.samples_per_client, &mut rng))
        .collect::<Result<Vec<_>, _>>()?;
    let validation = sample_clusters(spec, spec.validation_size, &mut rng)?;
    let test = sample_clusters(spec, spec.test_size, &mut rng)?;
    Ok(Federation { clients: build_clients(shards, &malicious, attack)?, validation, test, malicious, attack })
}

/// Random even split of the MNIST training set: the server keeps
/// `validation_size` examples and the rest go to the clients, the first
/// clients taking one extra example when the split is uneven.
pub fn make_mnist_federation(
    data: &MnistData,
    n: usize,
    n_m: usize,
    validation_size: usize,
    attack: Attack,
    master_seed: u64,
) -> Result<Federation, FlError> {
    if n == 0 || validation_size + n > data.train.len() {
        return Err(FlError::InvalidCounts(format!(
            "cannot split {} examples among {n} clients and {validation_size} validation examples",
            data.train.len()
        )));
    }
    let malicious = nested_malicious_set(n, n_m, master_seed)?;
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    order.shuffle(&mut rng_from_seed(derive_seed(master_seed, DATA_STREAM)));
    let validation = data.train.subset(&order[..validation_size]);
    let rest = &order[validation_size..];
    let (base, extra) = (rest.len() / n, rest.len() % n);
    let mut start = 0;
    let mut shards = Vec::with_capacity(n);
    for j in 0..n {
        let len = base + usize::from(j < extra);
        shards.push(data.train.subset(&rest[start..start + len]));
        start += len;
    }
    Ok(Federation {
        clients: build_clients(shards, &malicious, attack)?,
        validation,
        test: data.test.clone(),
        malicious,
        attack,
    })
}
