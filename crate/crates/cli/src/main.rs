use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fedgt::codes::{AssignmentMatrix, Preset, SyndromeVector};
use fedgt::decoder::{decide, forward_backward, DecoderConfig};
use fedgt::experiment::{
    comm_cost, privacy_report, run_decoder_only, run_experiment, DecoderOnlyConfig, ExperimentConfig, SecAggCostModel,
};
use fedgt::trellis::build_trellis;

#[derive(Parser)]
#[command(name = "fedgt", version, about = "Group testing for federated learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct MatrixArgs {
    /// Built-in matrix: bch15_7, cyclic15_9, cyclic15_11, bch31_21, identity(n), allones(n).
    #[arg(long, default_value = "bch15_7")]
    preset: Preset,
    /// Matrix text file ("m n" header, then m rows of 0/1); overrides --preset.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

impl MatrixArgs {
    fn load(&self) -> Result<AssignmentMatrix> {
        match &self.matrix {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
                Ok(text.parse().with_context(|| format!("invalid matrix file {}", path.display()))?)
            }
            None => Ok(self.preset.matrix()?),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; stdout when neither this nor the config sets one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured matrix preset.
    #[arg(long)]
    preset: Option<Preset>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(preset) = self.preset {
            cfg.preset = preset;
            cfg.matrix_file = None;
        }
        if let Some(out) = &self.out {
            cfg.output = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decode one vector of group-test outcomes.
    Decode {
        #[command(flatten)]
        matrix: MatrixArgs,
        /// Outcomes as a bit string, group 0 first, e.g. 10110000.
        #[arg(long)]
        tests: SyndromeVector,
        #[arg(long, default_value_t = 0.1)]
        prevalence: f64,
        #[arg(long, default_value_t = 0.05)]
        crossover: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        threshold: f64,
    },
    /// Inspect the trellis of a matrix.
    Trellis {
        #[command(subcommand)]
        action: TrellisAction,
    },
    /// Privacy level and group sizes of a matrix.
    Privacy {
        #[command(flatten)]
        matrix: MatrixArgs,
    },
    /// Run a federated-learning experiment and write per-round CSV.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Also write final-round means and standard deviations here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Misdetection and false-alarm rates of the decoder alone.
    DecoderOnly {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Secure-aggregation cost of a run with one group-testing round.
    CommCost {
        #[arg(long, default_value_t = 15)]
        n: usize,
        /// Number of groups.
        #[arg(long, default_value_t = 8)]
        m: usize,
        #[arg(long, default_value_t = 4)]
        group_size: usize,
        #[arg(long, default_value_t = 10)]
        rounds: usize,
        #[arg(long, default_value_t = 1)]
        test_round: usize,
        /// Take n, m and the largest group size from this preset.
        #[arg(long)]
        preset: Option<Preset>,
    },
}

#[derive(Subcommand)]
enum TrellisAction {
    /// Print every state and edge.
    Dump {
        #[command(flatten)]
        matrix: MatrixArgs,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Decode { matrix, tests, prevalence, crossover, threshold } => {
            let a = matrix.load()?;
            if tests.len() != a.groups() {
                bail!("--tests has {} bits but the matrix has {} groups", tests.len(), a.groups());
            }
            let cfg = DecoderConfig::new(prevalence, crossover, threshold)?;
            let llr = forward_backward(&build_trellis(&a)?, &tests, &cfg)?;
            let decision = decide(&llr, threshold);
            let mut out = io::stdout().lock();
            writeln!(out, "client,llr,flagged")?;
            for (j, l) in llr.values().iter().enumerate() {
                writeln!(out, "{j},{l},{}", u8::from(decision.d_hat.get(j)))?;
            }
            let excluded: Vec<String> = decision.excluded().iter().map(|j| j.to_string()).collect();
            writeln!(out, "excluded: {}", excluded.join(";"))?;
            if decision.fallback_no_defense {
                writeln!(out, "every client flagged; continuing without exclusion")?;
            }
        }
        Command::Trellis { action: TrellisAction::Dump { matrix } } => {
            print!("{}", build_trellis(&matrix.load()?)?.dump());
        }
        Command::Privacy { matrix } => {
            println!("{}", privacy_report(&matrix.load()?)?);
        }
        Command::Simulate { run, summary } => {
            let cfg = run.config()?;
            let report = run_experiment(&cfg)?;
            report.write_csv(output(cfg.output.as_deref())?)?;
            if let Some(path) = summary {
                report.write_summary_csv(output(Some(&path))?)?;
            }
        }
        Command::DecoderOnly { run } => {
            let cfg = run.config()?;
            let report = run_decoder_only(&cfg.matrix()?, &DecoderOnlyConfig::from_experiment(&cfg)?)?;
            report.write_csv(output(cfg.output.as_deref())?)?;
        }
        Command::CommCost { mut n, mut m, mut group_size, rounds, test_round, preset } => {
            if let Some(p) = preset {
                let a = p.matrix()?;
                (n, m, group_size) = (a.clients(), a.groups(), a.max_group_size());
            }
            let c = comm_cost(n, m, group_size, rounds, test_round, SecAggCostModel::Linear)?;
            println!("before: {}", c.before);
            println!("testing_round: {}", c.testing_round);
            println!("after: {}", c.after);
            println!("total: {}", c.total());
            println!("testing_ratio: {:.4}", c.testing_ratio);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
