//! `seqbound` command-line driver.
//!
//! Exit codes: 0 on success, 1 on a domain failure (bound violation,
//! divergence, search exhaustion, empty corpus), 2 on a usage error.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use seqbound::bounds::{write_bound_csv, BoundReport};
use seqbound::corpus::{self, IngestOptions, LengthPolicy};
use seqbound::decision::mismatch;
use seqbound::prob::{Alphabet, JointDist};
use seqbound::simulate::{self, Counterexample, SimConfig, SimRecord};
use seqbound::train::{format_sequences, TrainExperiment};

const ARTIFACT_VERSION: &str = concat!("seqbound ", env!("CARGO_PKG_VERSION"));

#[derive(Parser)]
#[command(name = "seqbound", version, about = "Decision-mismatch bounds for unsupervised sequence labeling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample (true, model) pairs and check every link of the bound chain.
    Simulate(SimulateArgs),
    /// Search for an exact-match pair whose decisions still differ.
    Counterexample(CounterexampleArgs),
    /// Report the conditioning of a corpus' position unigram matrix.
    CheckRank(CheckRankArgs),
    /// Train a conditional model from unlabeled synthetic data.
    Train(TrainArgs),
    /// Evaluate the bound chain for one (true, model) pair from JSON.
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(2..))]
    x_size: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    c_size: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    seq_len: u64,
    /// Number of accepted instances.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    /// Reject label priors whose P_C has sigma_min at or below this.
    #[arg(long, default_value_t = 0.01)]
    sigma_min_floor: f64,
    /// Reject label priors whose left-inverse has induced l1 norm above this.
    #[arg(long, default_value_t = 2.0)]
    pinv_l1_cap: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConditionArg {
    Rank,
    Structure,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[arg(long, value_enum)]
    condition: ConditionArg,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(2..))]
    x_size: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(2..))]
    c_size: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    seq_len: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    max_tries: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Truncate,
    Discard,
}

impl From<PolicyArg> for LengthPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Truncate => LengthPolicy::Truncate,
            PolicyArg::Discard => LengthPolicy::Discard,
        }
    }
}

#[derive(Args)]
struct CheckRankArgs {
    /// Text file with one whitespace-tokenized label sequence per line.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    seq_len: u64,
    #[arg(long, value_enum, default_value = "truncate")]
    policy: PolicyArg,
    #[arg(long, default_value_t = corpus::DEFAULT_VOCAB_CAP as u64, value_parser = clap::value_parser!(u64).range(1..))]
    vocab_cap: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON object with `true_dist` and `model_dist` joint distributions.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct RunManifest<'a, C: Serialize> {
    subcommand: &'a str,
    artifact_version: &'a str,
    master_seed: u64,
    config: C,
    outputs: Vec<&'a str>,
}

fn usage_error(msg: impl std::fmt::Display) -> ! {
    Cli::command().error(ErrorKind::ValueValidation, msg).exit()
}

fn alphabet(x: u64, c: u64, n: u64) -> Alphabet {
    Alphabet::new(x as usize, c as usize, n as usize).unwrap_or_else(|e| usage_error(e))
}

fn prepare_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_manifest<C: Serialize>(out: &Path, manifest: RunManifest<'_, C>) -> Result<()> {
    write_json(&out.join("manifest.json"), &manifest)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

/// `Ok(true)` on success, `Ok(false)` on a reported domain failure.
fn cmd_simulate(args: &SimulateArgs) -> Result<bool> {
    let config = SimConfig {
        alphabet: alphabet(args.x_size, args.c_size, args.seq_len),
        samples: args.samples as usize,
        sigma_min_floor: args.sigma_min_floor,
        pinv_l1_cap: args.pinv_l1_cap,
        master_seed: args.seed,
        ..SimConfig::default()
    };
    if let Err(e) = config.validate() {
        usage_error(e);
    }
    prepare_dir(&args.out)?;
    let records = simulate::run_bound_simulation(&config)?;
    write_bound_csv(create(&args.out.join("bounds.csv"))?, records.iter().map(|r| &r.report))?;

    let violations: Vec<&SimRecord> = records.iter().filter(|r| !r.report.chain_ok()).collect();
    let mut outputs = vec!["bounds.csv"];
    if let Some(first) = violations.first() {
        let instance = simulate::simulate_instance(&config, first.index)?;
        let dump = json!({
            "violating_indices": violations.iter().map(|r| r.index).collect::<Vec<_>>(),
            "record": instance.record,
            "true_dist": instance.true_dist,
            "model_dist": instance.model_dist,
        });
        write_json(&args.out.join("violation.json"), &dump)?;
        outputs.push("violation.json");
    }
    write_manifest(
        &args.out,
        RunManifest {
            subcommand: "simulate",
            artifact_version: ARTIFACT_VERSION,
            master_seed: args.seed,
            config: &config,
            outputs,
        },
    )?;
    println!("{} instances, {} chain violations", records.len(), violations.len());
    if !violations.is_empty() {
        eprintln!("error: bound chain violated; first offending instance in violation.json");
    }
    Ok(violations.is_empty())
}

fn cmd_counterexample(args: &CounterexampleArgs) -> Result<bool> {
    let a = alphabet(args.x_size, args.c_size, args.seq_len);
    let tries = args.max_tries as usize;
    let found = match args.condition {
        ConditionArg::Rank => simulate::find_rank_counterexample(&a, args.seed, tries),
        ConditionArg::Structure => simulate::find_structure_counterexample(&a, args.seed, tries),
    };
    let witness: Counterexample = match found {
        Ok(w) => w,
        Err(e @ (seqbound::Error::NotFound { .. } | seqbound::Error::InvalidConfig(_))) => {
            eprintln!("error: {e}");
            return Ok(false);
        }
        Err(e) => return Err(e.into()),
    };
    let recomputed = witness.verify()?;
    if recomputed != witness.certificate {
        anyhow::bail!("stored certificate does not match recomputation");
    }
    prepare_dir(&args.out)?;
    write_json(&args.out.join("counterexample.json"), &witness)?;
    let config = json!({
        "condition": match args.condition { ConditionArg::Rank => "rank", ConditionArg::Structure => "structure" },
        "alphabet": a,
        "max_tries": args.max_tries,
    });
    write_manifest(
        &args.out,
        RunManifest {
            subcommand: "counterexample",
            artifact_version: ARTIFACT_VERSION,
            master_seed: args.seed,
            config,
            outputs: vec!["counterexample.json"],
        },
    )?;
    let c = &witness.certificate;
    println!(
        "{:?}: l1_marginal = {:.3e}, delta_bar = {:.6}, sigma_min = {:.6}",
        c.violated_condition, c.l1_marginal, c.delta_bar, c.sigma_min
    );
    Ok(true)
}

fn cmd_check_rank(args: &CheckRankArgs) -> Result<bool> {
    let options = IngestOptions {
        seq_len: args.seq_len as usize,
        policy: args.policy.into(),
        vocab_cap: args.vocab_cap as usize,
    };
    let stats = match corpus::ingest_with(&args.corpus, options) {
        Ok(s) => s,
        Err(e @ (seqbound::Error::EmptyCorpus | seqbound::Error::VocabTooLarge { .. })) => {
            eprintln!("error: {e}");
            return Ok(false);
        }
        Err(e) => return Err(e).with_context(|| format!("reading {}", args.corpus.display())),
    };
    let report = stats.report();
    prepare_dir(&args.out)?;
    write_json(&args.out.join("corpus_report.json"), &report)?;
    let config = json!({
        "corpus": args.corpus,
        "seq_len": args.seq_len,
        "policy": options.policy,
        "vocab_cap": args.vocab_cap,
    });
    write_manifest(
        &args.out,
        RunManifest {
            subcommand: "check-rank",
            artifact_version: ARTIFACT_VERSION,
            master_seed: 0,
            config,
            outputs: vec!["corpus_report.json"],
        },
    )?;
    println!(
        "{} sequences, vocab {}, rank {}, sigma_min = {:.6}",
        report.sequence_count, report.vocab_size, report.rank, report.sigma_min
    );
    Ok(true)
}

fn cmd_train(args: &TrainArgs) -> Result<bool> {
    let text = fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let experiment: TrainExperiment =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.config.display()))?;
    let output = match experiment.run() {
        Ok(o) => o,
        Err(e @ seqbound::Error::DivergenceDetected { .. }) => {
            eprintln!("error: {e}");
            return Ok(false);
        }
        Err(e) => return Err(e.into()),
    };
    prepare_dir(&args.out)?;
    let mut outputs = vec!["trajectory.csv", "model.json", "bounds.csv", "report.json"];
    output.trajectory.write_csv(create(&args.out.join("trajectory.csv"))?)?;
    let model = json!({
        "x_size": output.params.x_size(),
        "c_size": output.params.c_size(),
        "logits": output.params.logits().chunks(output.params.c_size()).collect::<Vec<_>>(),
        "cond": output.params.conditional(),
        "stop": output.trajectory.stop,
        "iterations": output.trajectory.points.len() - 1,
    });
    write_json(&args.out.join("model.json"), &model)?;
    write_bound_csv(create(&args.out.join("bounds.csv"))?, [&output.final_report])?;
    write_json(&args.out.join("report.json"), &output.final_report)?;
    if let Some(seqs) = &output.sequences {
        fs::write(args.out.join("dataset.txt"), format_sequences(seqs))?;
        outputs.push("dataset.txt");
    }
    let seed = match experiment.dataset {
        seqbound::train::DatasetSpec::Sampled { seed, .. } => seed,
        seqbound::train::DatasetSpec::Population => 0,
    };
    write_manifest(
        &args.out,
        RunManifest {
            subcommand: "train",
            artifact_version: ARTIFACT_VERSION,
            master_seed: seed,
            config: &experiment,
            outputs,
        },
    )?;
    let last = output.trajectory.points.last().expect("at least one point");
    println!(
        "{:?} after {} iterations: loss = {:.6}, delta_bar = {:.6}",
        output.trajectory.stop, last.iter, last.loss, output.final_report.delta_bar
    );
    Ok(true)
}

#[derive(serde::Deserialize)]
struct ReportInstance {
    true_dist: JointDist,
    model_dist: JointDist,
}

fn cmd_report(args: &ReportArgs) -> Result<bool> {
    let text = fs::read_to_string(&args.instance).with_context(|| format!("reading {}", args.instance.display()))?;
    let inst: ReportInstance =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.instance.display()))?;
    let report = BoundReport::evaluate(args.seed, &inst.true_dist, &inst.model_dist)?;
    let local = mismatch(&inst.true_dist, &inst.model_dist)?;
    prepare_dir(&args.out)?;
    write_json(&args.out.join("report.json"), &json!({ "report": report, "mismatch": local }))?;
    write_bound_csv(create(&args.out.join("bounds.csv"))?, [&report])?;
    write_manifest(
        &args.out,
        RunManifest {
            subcommand: "report",
            artifact_version: ARTIFACT_VERSION,
            master_seed: args.seed,
            config: json!({ "instance": args.instance }),
            outputs: vec!["report.json", "bounds.csv"],
        },
    )?;
    println!("delta_bar = {:.6}, d_bar = {:.6}, chain_ok = {}", report.delta_bar, report.d_bar, report.chain_ok());
    Ok(report.chain_ok())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Counterexample(a) => cmd_counterexample(a),
        Command::CheckRank(a) => cmd_check_rank(a),
        Command::Train(a) => cmd_train(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e:#}");
            ExitCode::from(1)
        }
    }
}
