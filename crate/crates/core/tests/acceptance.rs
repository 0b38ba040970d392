//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Set `FEDGT_MNIST_DIR` to a directory holding the four MNIST IDX files to
//! run the MNIST criterion; it is skipped otherwise.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use fedgt::codes::{privacy_level, AssignmentMatrix, Preset, SyndromeVector};
use fedgt::decoder::{brute_force_posterior, decide, forward_backward, DecodeError, DecoderConfig};
use fedgt::experiment::{
    comm_cost, run_decoder_only, run_experiment, trial_seed, AttackKind, DatasetKind, DecoderOnlyConfig,
    ExperimentConfig, ExperimentReport, SecAggCostModel,
};
use fedgt::flsim::{nested_malicious_set, Strategy};
use fedgt::rng::rng_from_seed;
use fedgt::trellis::build_trellis;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::{Fail, Pass, Skip};

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn random_matrix(rng: &mut impl Rng) -> AssignmentMatrix {
    loop {
        let n = rng.random_range(1..=12);
        let m = rng.random_range(1..=6);
        let columns: Vec<u64> = (0..n).map(|_| rng.random_range(1..1u64 << m)).collect();
        let rows: Vec<Vec<u8>> = (0..m).map(|i| columns.iter().map(|c| (c >> i & 1) as u8).collect()).collect();
        // the matrix type also rejects empty groups; draw again in that case
        if let Ok(a) = AssignmentMatrix::from_dense(&rows) {
            return a;
        }
    }
}

fn decoder_oracle_equivalence() -> Outcome {
    let mut rng = rng_from_seed(0xACCE_0001);
    let mut compared = 0usize;
    let mut worst = 0.0f64;
    for case in 0..200 {
        let a = random_matrix(&mut rng);
        let trellis = build_trellis(&a).unwrap();
        for delta in [0.1, 0.3] {
            for p in [0.0, 0.05, 0.2] {
                let cfg = DecoderConfig::new(delta, p, 0.0).unwrap();
                for mask in 0..1u64 << a.groups() {
                    let t = SyndromeVector::from_mask(a.groups(), mask).unwrap();
                    match (forward_backward(&trellis, &t, &cfg), brute_force_posterior(&a, &t, &cfg)) {
                        (Ok(fb), Ok(bf)) => {
                            for (x, y) in fb.values().iter().zip(bf.values()) {
                                worst = worst.max((x - y).abs() / x.abs().max(y.abs()).max(1.0));
                                if !close(*x, *y, 1e-9) {
                                    return Fail(format!("case {case}, delta {delta}, p {p}, t {t}: {x} vs {y}"));
                                }
                                compared += 1;
                            }
                        }
                        (Err(DecodeError::AllPathsZeroProbability), Err(DecodeError::AllPathsZeroProbability)) => {}
                        (x, y) => return Fail(format!("case {case}, t {t}: decoders disagree: {x:?} vs {y:?}")),
                    }
                }
            }
        }
    }
    Pass(format!("{compared} LLRs compared, worst relative difference {worst:.1e}"))
}

fn degenerate_cases() -> Outcome {
    let mut rng = rng_from_seed(0xACCE_0002);
    for n in [1, 8, 12, 15] {
        let a = AssignmentMatrix::identity(n).unwrap();
        let trellis = build_trellis(&a).unwrap();
        let cfg = DecoderConfig::new(0.1, 0.0, 0.0).unwrap();
        // every outcome up to 12 clients, a random sample beyond
        let masks: Vec<u64> = if n <= 12 { (0..1u64 << n).collect() } else { (0..500).map(|_| rng.random_range(0..1u64 << n)).collect() };
        for mask in masks {
            let t = SyndromeVector::from_mask(n, mask).unwrap();
            let llr = forward_backward(&trellis, &t, &cfg).unwrap();
            if decide(&llr, 0.0).d_hat.bits() != t.bits().as_slice() {
                return Fail(format!("identity({n}): t = {t} decoded differently"));
            }
        }
    }
    for n in [2, 5, 15] {
        let a = AssignmentMatrix::all_ones(n).unwrap();
        let t = SyndromeVector::from_mask(1, 1).unwrap();
        for (delta, p) in [(0.1, 0.0), (0.2, 0.05), (0.3, 0.2)] {
            let cfg = DecoderConfig::new(delta, p, 0.0).unwrap();
            let llr = forward_backward(&build_trellis(&a).unwrap(), &t, &cfg).unwrap();
            if llr.values().iter().any(|&l| l != llr.values()[0]) {
                return Fail(format!("allones({n}), delta {delta}, p {p}: LLRs differ: {:?}", llr.values()));
            }
        }
    }
    Pass("identity recovers t exactly (exhaustive up to n = 12, 500 draws at n = 15); all-ones LLRs bitwise equal".into())
}

fn privacy_levels() -> Outcome {
    let expected = [
        (Preset::Bch15_7, 4, 8, 4),
        (Preset::Cyclic15_9, 6, 6, 6),
        (Preset::Cyclic15_11, 8, 4, 8),
        (Preset::Bch31_21, 12, 10, 12),
    ];
    let mut seen = Vec::new();
    for (preset, level, groups, size) in expected {
        let a = preset.matrix().unwrap();
        let r = privacy_level(&a).unwrap();
        let sizes_ok = a.group_sizes().iter().all(|&s| s == size);
        seen.push(format!("{preset}: r={r} {}x{}", a.groups(), a.max_group_size()));
        if r != level || a.groups() != groups || !sizes_ok {
            return Fail(seen.join(", "));
        }
    }
    Pass(seen.join(", "))
}

fn lambdas() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

fn threshold_monotonicity() -> Outcome {
    let a = Preset::Bch15_7.matrix().unwrap();
    let cfg = DecoderOnlyConfig {
        n_malicious: 3,
        true_crossover: 0.05,
        decoder: DecoderConfig::new(0.2, 0.05, 0.0).unwrap(),
        thresholds: lambdas(),
        trials: 1,
        seed: 0,
    };
    let report = run_decoder_only(&a, &cfg).unwrap();
    if !report.exhaustive {
        return Fail("decoder-only did not enumerate".into());
    }
    let rows = &report.rows;
    let fa_ok = rows.windows(2).all(|w| w[1].p_fa >= w[0].p_fa);
    let md_ok = rows.windows(2).all(|w| w[1].p_md <= w[0].p_md);
    let detail = format!(
        "{} evaluations; P_FA {:.4} -> {:.4}, P_MD {:.4} -> {:.4} over lambda 0.1..0.9",
        report.evaluations,
        rows[0].p_fa,
        rows[8].p_fa,
        rows[0].p_md,
        rows[8].p_md
    );
    verdict(fa_ok && md_ok, detail)
}

fn final_means(report: &ExperimentReport, strategy: Strategy) -> (f64, f64) {
    let summary = report.summary();
    let row = summary.iter().find(|r| r.strategy == strategy).expect("strategy present");
    (row.top1.mean, row.attack_acc.mean)
}

fn mnist_reproduction() -> Outcome {
    let Some(dir) = std::env::var_os("FEDGT_MNIST_DIR").map(PathBuf::from) else {
        return Skip("FEDGT_MNIST_DIR not set; the synthetic criterion governs".into());
    };
    let base = ExperimentConfig {
        dataset: DatasetKind::Mnist,
        mnist_dir: Some(dir),
        attack: AttackKind::LabelFlip,
        source_label: 1,
        target_label: 7,
        thresholds: vec![0.9],
        trials: 10,
        master_seed: 1,
        ..Default::default()
    };
    let benign = ExperimentConfig { n_malicious: 0, strategies: vec![Strategy::NoDefense], ..base.clone() };
    let report = match run_experiment(&benign) {
        Ok(r) => r,
        Err(e) => return Fail(format!("cannot run: {e}")),
    };
    let (clean_top1, _) = final_means(&report, Strategy::NoDefense);

    let attacked = ExperimentConfig {
        n_malicious: 5,
        strategies: vec![Strategy::FedGt, Strategy::NoDefense, Strategy::Oracle],
        ..base
    };
    let report = run_experiment(&attacked).unwrap();
    let (fedgt_top1, fedgt_att) = final_means(&report, Strategy::FedGt);
    let (_, nodef_att) = final_means(&report, Strategy::NoDefense);
    let (oracle_top1, _) = final_means(&report, Strategy::Oracle);
    let ok = (clean_top1 - 0.903).abs() <= 0.010
        && nodef_att >= 3.0 * fedgt_att
        && (fedgt_top1 - oracle_top1).abs() <= 0.005;
    verdict(
        ok,
        format!(
            "benign top1 {clean_top1:.4}; attack acc no-defense {nodef_att:.4} vs fedgt {fedgt_att:.4}; top1 fedgt {fedgt_top1:.4} vs oracle {oracle_top1:.4}"
        ),
    )
}

fn synthetic_config() -> ExperimentConfig {
    ExperimentConfig {
        preset: Preset::Bch15_7,
        n: 15,
        n_malicious: 3,
        attack: AttackKind::LabelPermutation,
        crossover: 0.05,
        thresholds: vec![0.9],
        test_noise: 0.0,
        learning_rate: 5.0,
        batch_size: 64,
        local_epochs: 1,
        rounds: 10,
        test_round: 3,
        strategies: vec![Strategy::FedGt, Strategy::NoDefense, Strategy::Oracle],
        trials: 20,
        master_seed: 1,
        n_classes: 10,
        n_features: 20,
        samples_per_client: 200,
        cluster_separation: 6.0,
        validation_size: 100,
        test_size: 2000,
        ..Default::default()
    }
}

fn synthetic_end_to_end() -> Outcome {
    let cfg = synthetic_config();
    let calibration = ExperimentConfig { n_malicious: 0, strategies: vec![Strategy::NoDefense], ..cfg.clone() };
    let report = run_experiment(&calibration).unwrap();
    let slowest = report
        .runs
        .iter()
        .map(|r| r.rounds.iter().position(|m| m.top1 >= 0.95).map_or(usize::MAX, |k| k + 1))
        .max()
        .unwrap();
    if slowest > 5 {
        return Fail(format!("calibration: benign training needs {slowest} rounds to reach top1 0.95"));
    }

    let report = run_experiment(&cfg).unwrap();
    let (fedgt, _) = final_means(&report, Strategy::FedGt);
    let (nodef, _) = final_means(&report, Strategy::NoDefense);
    let (oracle, _) = final_means(&report, Strategy::Oracle);
    let ok = (oracle - fedgt).abs() <= 0.02 && oracle - nodef >= 0.05;
    verdict(
        ok,
        format!(
            "calibration reaches 0.95 by round {slowest}; final top1 fedgt {fedgt:.4}, no-defense {nodef:.4}, oracle {oracle:.4}"
        ),
    )
}

fn mismatch_robustness() -> Outcome {
    let a = Preset::Bch15_7.matrix().unwrap();
    let wide: Vec<f64> = (-100..=100).map(|k| k as f64 / 10.0).collect();
    let narrow_sweep = lambdas();
    let mut best_wide = Vec::new();
    let mut best_narrow = Vec::new();
    let mut fixed = Vec::new();
    for delta in [0.05, 0.15, 0.25, 0.35] {
        for p in [0.0, 0.05, 0.1, 0.2] {
            let cfg = DecoderOnlyConfig {
                n_malicious: 3,
                true_crossover: 0.05,
                decoder: DecoderConfig::new(delta, p, 0.0).unwrap(),
                thresholds: wide.clone(),
                trials: 1,
                seed: 0,
            };
            let report = run_decoder_only(&a, &cfg).unwrap();
            assert!(report.exhaustive);
            let total = |l: f64| report.rows.iter().find(|r| close(r.lambda, l, 1e-12)).map(|r| r.p_md + r.p_fa).unwrap();
            let min_over = |ls: &[f64]| ls.iter().map(|&l| total(l)).fold(f64::INFINITY, f64::min);
            best_wide.push(min_over(&wide));
            best_narrow.push(min_over(&narrow_sweep));
            fixed.push(total(0.9));
        }
    }
    let spread = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
    let s = spread(&best_wide);
    verdict(
        s <= 0.05,
        format!(
            "spread of P_MD+P_FA at the best lambda in [-10, 10]: {s:.4} (best lambda in 0.1..0.9: {:.4}; fixed lambda 0.9: {:.4})",
            spread(&best_narrow),
            spread(&fixed)
        ),
    )
}

fn communication_cost() -> Outcome {
    let c = comm_cost(15, 8, 4, 10, 1, SecAggCostModel::Linear).unwrap();
    verdict(
        c.testing_round == 32.0 && (2.0..=2.2).contains(&c.testing_ratio),
        format!("testing round {} = {:.4} x c(15)", c.testing_round, c.testing_ratio),
    )
}

fn determinism() -> Outcome {
    let cfg = ExperimentConfig {
        rounds: 3,
        trials: 3,
        samples_per_client: 60,
        test_size: 300,
        thresholds: vec![0.1, 0.9],
        master_seed: 99,
        ..synthetic_config()
    };
    let cfg = ExperimentConfig { strategies: Strategy::ALL.to_vec(), ..cfg };
    let first = run_experiment(&cfg).unwrap();
    let second = run_experiment(&cfg).unwrap();
    let (a, b) = (first.to_csv_string().unwrap(), second.to_csv_string().unwrap());
    if a != b {
        return Fail("CSV differs between identical runs".into());
    }
    for trial in 0..cfg.trials {
        let runs: Vec<_> = first.runs.iter().filter(|r| r.trial == trial).collect();
        let expected = nested_malicious_set(cfg.n, cfg.n_malicious, trial_seed(cfg.master_seed, trial)).unwrap();
        if runs.iter().any(|r| r.malicious != expected || r.seed != runs[0].seed) {
            return Fail(format!("trial {trial}: strategies saw different malicious sets or seeds"));
        }
    }
    let a_cfg = DecoderOnlyConfig {
        n_malicious: 6,
        true_crossover: 0.05,
        decoder: DecoderConfig::new(0.2, 0.05, 0.0).unwrap(),
        thresholds: lambdas(),
        trials: 500,
        seed: 3,
    };
    let matrix = Preset::Bch31_21.matrix().unwrap();
    if run_decoder_only(&matrix, &a_cfg).unwrap() != run_decoder_only(&matrix, &a_cfg).unwrap() {
        return Fail("sampled decoder-only run is not reproducible".into());
    }
    Pass(format!("{} CSV bytes identical; malicious sets shared across strategies in all {} trials", a.len(), cfg.trials))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("decoder-oracle equivalence", decoder_oracle_equivalence),
        ("degenerate matrices", degenerate_cases),
        ("privacy levels", privacy_levels),
        ("threshold monotonicity", threshold_monotonicity),
        ("MNIST reproduction", mnist_reproduction),
        ("synthetic end-to-end", synthetic_end_to_end),
        ("mismatch robustness", mismatch_robustness),
        ("communication cost", communication_cost),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("criterion {} ({name}): {tag} [{secs:.1}s] {detail}", k + 1);
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    } else {
        println!("acceptance: all criteria passed or skipped");
        ExitCode::SUCCESS
    }
}
