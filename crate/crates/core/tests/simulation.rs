use std::fs;
use std::path::Path;

use fedgt::experiment::{run_experiment, trial_seed, AttackKind, DatasetKind, ExperimentConfig};
use fedgt::flsim::{load_mnist, nested_malicious_set, Strategy};

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        n_malicious: 3,
        attack: AttackKind::LabelPermutation,
        rounds: 3,
        test_round: 2,
        learning_rate: 1.0,
        samples_per_client: 40,
        test_size: 200,
        trials: 3,
        thresholds: vec![0.1, 0.9],
        master_seed: 11,
        ..ExperimentConfig::default()
    }
}

fn write_idx(dir: &Path, prefix: &str, labels: &[u8], side: usize) {
    let mut images = Vec::new();
    for v in [2051u32, labels.len() as u32, side as u32, side as u32] {
        images.extend_from_slice(&v.to_be_bytes());
    }
    for (i, &l) in labels.iter().enumerate() {
        // class l lights pixel l, with a faint varying background
        for p in 0..side * side {
            images.push(if p == l as usize { 255 } else { ((i * 7 + p * 3) % 40) as u8 });
        }
    }
    let mut label_bytes = Vec::new();
    for v in [2049u32, labels.len() as u32] {
        label_bytes.extend_from_slice(&v.to_be_bytes());
    }
    label_bytes.extend_from_slice(labels);
    fs::write(dir.join(format!("{prefix}-images-idx3-ubyte")), images).unwrap();
    fs::write(dir.join(format!("{prefix}-labels-idx1-ubyte")), label_bytes).unwrap();
}

#[test]
fn config_survives_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    let cfg = ExperimentConfig { prevalence: Some(0.2), ..small_config() };
    fs::write(&path, cfg.to_json()).unwrap();
    assert_eq!(ExperimentConfig::from_file(&path).unwrap(), cfg);
}

#[test]
fn experiments_are_deterministic() {
    let cfg = small_config();
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_csv_string().unwrap(), b.to_csv_string().unwrap());
    let other = run_experiment(&ExperimentConfig { master_seed: 12, ..cfg }).unwrap();
    assert_ne!(a.to_csv_string().unwrap(), other.to_csv_string().unwrap());
}

#[test]
fn strategies_in_a_trial_share_seed_and_attackers() {
    let cfg = small_config();
    let report = run_experiment(&cfg).unwrap();
    for trial in 0..cfg.trials {
        let runs: Vec<_> = report.runs.iter().filter(|r| r.trial == trial).collect();
        assert_eq!(runs.len(), cfg.thresholds.len() + 3);
        let seed = trial_seed(cfg.master_seed, trial);
        assert!(runs.iter().all(|r| r.seed == seed));
        let expected = nested_malicious_set(cfg.n, cfg.n_malicious, seed).unwrap();
        assert!(runs.iter().all(|r| r.malicious == expected));
    }
    for r in &report.runs {
        assert_eq!(r.lambda.is_some(), r.strategy == Strategy::FedGt);
        assert_eq!(r.group_test.is_some(), r.strategy == Strategy::FedGt);
    }
}

#[test]
fn malicious_sets_grow_by_inclusion() {
    for seed in [0, 1, 99] {
        let mut previous = Vec::new();
        for n_m in 0..=15 {
            let set = nested_malicious_set(15, n_m, seed).unwrap();
            assert_eq!(set.len(), n_m);
            assert!(previous.iter().all(|j| set.contains(j)), "seed {seed}, n_m {n_m}");
            previous = set;
        }
    }
}

#[test]
fn oracle_excludes_exactly_the_attackers() {
    let cfg = ExperimentConfig { strategies: vec![Strategy::Oracle], ..small_config() };
    for run in run_experiment(&cfg).unwrap().runs {
        for round in &run.rounds {
            let mut excluded = round.excluded.clone();
            excluded.sort_unstable();
            let mut malicious = run.malicious.clone();
            malicious.sort_unstable();
            assert_eq!(excluded, malicious);
        }
    }
}

#[test]
fn mnist_format_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let train: Vec<u8> = (0..600).map(|i| (i % 10) as u8).collect();
    let test: Vec<u8> = (0..200).map(|i| (i * 3 % 10) as u8).collect();
    write_idx(dir.path(), "train", &train, 4);
    write_idx(dir.path(), "t10k", &test, 4);

    let data = load_mnist(dir.path()).unwrap();
    assert_eq!((data.train.len(), data.test.len(), data.train.n_features()), (600, 200, 16));

    let cfg = ExperimentConfig {
        dataset: DatasetKind::Mnist,
        mnist_dir: Some(dir.path().to_path_buf()),
        validation_size: 60,
        n_malicious: 2,
        attack: AttackKind::LabelFlip,
        rounds: 2,
        trials: 2,
        learning_rate: 0.5,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.runs.len(), 2 * 4);
    assert_eq!(report, run_experiment(&cfg).unwrap());
    let csv = report.to_csv_string().unwrap();
    assert_eq!(csv.lines().count(), 1 + report.row_count());
    for run in &report.runs {
        for m in &run.rounds {
            assert!((0.0..=1.0).contains(&m.top1) && (0.0..=1.0).contains(&m.source_recall));
        }
    }
}

#[test]
fn missing_mnist_files_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        dataset: DatasetKind::Mnist,
        mnist_dir: Some(dir.path().to_path_buf()),
        ..ExperimentConfig::default()
    };
    let err = run_experiment(&cfg).unwrap_err().to_string();
    assert!(err.contains("train-images"), "{err}");
}

#[test]
fn real_mnist_matches_raw_bytes() {
    let Ok(dir) = std::env::var("FEDGT_MNIST_DIR") else {
        eprintln!("FEDGT_MNIST_DIR not set; skipping");
        return;
    };
    let data = load_mnist(&dir).unwrap();
    assert_eq!((data.train.len(), data.test.len(), data.train.n_features()), (60_000, 10_000, 784));
    let raw = ["train-labels-idx1-ubyte", "train-labels.idx1-ubyte"]
        .iter()
        .find_map(|name| fs::read(Path::new(&dir).join(name)).ok())
        .unwrap();
    assert_eq!(raw[8], 5);
    assert_eq!(data.train.label(0), 5);
}
