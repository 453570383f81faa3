//! Command-line interface.
//!
//! Failures print one JSON object on stderr,
//! `{"error":{"kind":"config","message":"..."}}`, and exit with 2 (config),
//! 3 (data) or 4 (training). Every artifact embeds the configuration that
//! produced it; output locations and `--jobs` are left out so that reruns
//! elsewhere produce identical bytes.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::analysis::{emit_reports, rmse, ENTROPY_FILE, RESULTS_FILE};
use crate::data::{
    extract_dataset, synthesize, Dataset, Modality, NoiseProfile, SplitSpec, SyntheticSpec, DEFAULT_TEST_FRACTION,
    DEFAULT_VAL_FRACTION,
};
use crate::ensemble::{BoostMode, BoostedEnsemble, BundleInfo, FusionRule, WeightChain};
use crate::error::{Error, ErrorKind, Result};
use crate::experiment::{compare, dataset_split, parse_order, train_one, ProtocolConfig, DEFAULT_ORDER};
use crate::nn::{TrainConfig, DEFAULT_LEARNING_RATE};

fn parse_arg<T: FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse::<T>().map_err(|e| match e {
        Error::Config(m) => m,
        other => other.to_string(),
    })
}

fn parse_chain(s: &str) -> std::result::Result<WeightChain, String> {
    match s {
        "previous" => Ok(WeightChain::Previous),
        "cumulative" => Ok(WeightChain::Cumulative),
        other => Err(format!("unknown weight chain `{other}`")),
    }
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let seeds = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("invalid seed `{}`", s.trim())))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut unique = seeds.clone();
    unique.sort_unstable();
    unique.dedup();
    if unique.len() != seeds.len() {
        return Err(Error::Config("seeds must not repeat".into()));
    }
    Ok(seeds)
}

#[derive(Debug, Parser)]
#[command(name = "uaboost", version, about = "Uncertainty-aware boosted ensembles of heteroscedastic regressors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract features from a corpus directory into a dataset file.
    Extract(ExtractArgs),
    /// Write a synthetic heteroscedastic dataset.
    Synth(SynthArgs),
    /// Train one ensemble for one seed and save it as a bundle.
    Train(TrainArgs),
    /// Score a saved bundle on the test split.
    Evaluate(EvaluateArgs),
    /// Individual learners and all ensembles over several seeds; writes results.csv and entropy.svg.
    Compare(CompareArgs),
    /// Vanilla versus uncertainty-aware entropy study; writes entropy.svg.
    Entropy(CompareArgs),
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Corpus directory with transcripts/, acoustic.csv and labels.csv.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Dataset file written by `extract` or `synth`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    #[arg(long, default_value_t = DEFAULT_TEST_FRACTION)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_VAL_FRACTION)]
    pub val_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
}

impl SplitArgs {
    fn spec(&self) -> Result<SplitSpec> {
        let spec = SplitSpec {
            test_fraction: self.test_fraction,
            val_fraction_of_train: self.val_fraction,
            seed: self.split_seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Args)]
pub struct Hyper {
    #[arg(long, default_value_t = DEFAULT_LEARNING_RATE)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 50)]
    pub patience: usize,
}

impl Hyper {
    fn config(&self) -> Result<TrainConfig> {
        let tc = TrainConfig {
            batch_size: self.batch,
            learning_rate: self.lr,
            max_epochs: self.epochs,
            patience: self.patience,
            ..TrainConfig::default()
        };
        tc.validate()?;
        Ok(tc)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub data_dir: PathBuf,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Output dataset file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// input-scaled, step or constant.
    #[arg(long, default_value = "input-scaled", value_parser = parse_arg::<NoiseProfile>)]
    pub profile: NoiseProfile,
    #[arg(long, default_value_t = 4)]
    pub input_dim: usize,
    /// Output dataset file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub split: SplitArgs,
    /// vanilla or ua.
    #[arg(long, default_value = "ua", value_parser = parse_arg::<BoostMode>)]
    pub mode: BoostMode,
    /// mean or inverse-sigma.
    #[arg(long, default_value = "mean", value_parser = parse_arg::<FusionRule>)]
    pub fusion: FusionRule,
    /// previous or cumulative.
    #[arg(long, default_value = "previous", value_parser = parse_chain)]
    pub chain: WeightChain,
    /// Comma-separated learner order.
    #[arg(long)]
    pub order: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub hyper: Hyper,
    /// Bundle directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Bundle directory written by `train`.
    #[arg(long)]
    pub bundle: PathBuf,
    /// Overrides the bundle's fusion rule.
    #[arg(long, value_parser = parse_arg::<FusionRule>)]
    pub fusion: Option<FusionRule>,
    /// Also write the report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long)]
    pub order: Option<String>,
    #[arg(long, default_value = "0,1,2,3,4")]
    pub seeds: String,
    #[arg(long, default_value = "previous", value_parser = parse_chain)]
    pub chain: WeightChain,
    #[command(flatten)]
    pub hyper: Hyper,
    /// Seeds run concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn chain_str(c: WeightChain) -> &'static str {
    match c {
        WeightChain::Previous => "previous",
        WeightChain::Cumulative => "cumulative",
    }
}

fn order_or_default(order: &Option<String>) -> Result<Vec<Modality>> {
    order.as_deref().map_or_else(|| Ok(DEFAULT_ORDER.to_vec()), parse_order)
}

fn source_echo(source: &Source) -> Value {
    match (&source.data_dir, &source.dataset) {
        (Some(dir), _) => json!({"data_dir": dir.display().to_string()}),
        (_, Some(file)) => json!({"dataset": file.display().to_string()}),
        _ => Value::Null,
    }
}

fn load_source(source: &Source, split: &SplitSpec) -> Result<Dataset> {
    match (&source.data_dir, &source.dataset) {
        (Some(dir), _) => Ok(extract_dataset(dir, split)?.0),
        (_, Some(file)) => Dataset::load(file),
        _ => Err(Error::Config("either --data-dir or --dataset is required".into())),
    }
}

fn train_echo(tc: &TrainConfig) -> Value {
    json!({
        "learning_rate": tc.learning_rate,
        "batch_size": tc.batch_size,
        "max_epochs": tc.max_epochs,
        "patience": tc.patience,
        "clip_norm": tc.clip_norm,
    })
}

fn echo(command: &str, fields: Value) -> Value {
    let mut obj = json!({
        "tool": "uaboost",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
    });
    if let (Some(o), Value::Object(extra)) = (obj.as_object_mut(), fields) {
        o.extend(extra);
    }
    obj
}

fn print_json(value: &Value) {
    println!("{}", serde_json::to_string(value).expect("json values serialize"));
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json values serialize") + "\n";
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run_extract(a: &ExtractArgs) -> Result<()> {
    let spec = a.split.spec()?;
    let (dataset, pipeline) = extract_dataset(&a.data_dir, &spec)?;
    let cfg = echo(
        "extract",
        json!({"data_dir": a.data_dir.display().to_string(), "split": spec}),
    );
    dataset.save_with_config(&a.out, Some(&cfg))?;
    print_json(&json!({
        "subjects": dataset.len(),
        "acoustic_dim": pipeline.acoustic_dim,
        "out": a.out.display().to_string(),
    }));
    Ok(())
}

fn run_synth(a: &SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        n: a.n,
        input_dim: a.input_dim,
        noise_profile: a.profile,
        seed: a.seed,
    };
    let dataset = synthesize(&spec)?;
    let cfg = echo("synth", json!({"synth": spec}));
    dataset.save_with_config(&a.out, Some(&cfg))?;
    print_json(&json!({"subjects": dataset.len(), "out": a.out.display().to_string()}));
    Ok(())
}

fn run_train(a: &TrainArgs) -> Result<()> {
    let order = order_or_default(&a.order)?;
    let tc = a.hyper.config()?;
    let fallback = a.split.spec()?;
    let dataset = load_source(&a.source, &fallback)?;
    let (spec, parts) = dataset_split(&dataset, &fallback)?;
    let ens = train_one(&dataset, &parts, &order, a.mode, a.fusion, a.chain, &tc, a.seed)?;
    let cfg = echo(
        "train",
        json!({
            "source": source_echo(&a.source),
            "split": spec,
            "mode": a.mode,
            "fusion": a.fusion,
            "chain": chain_str(a.chain),
            "order": order,
            "seed": a.seed,
            "train": train_echo(&tc),
        }),
    );
    ens.save(
        &a.out,
        &BundleInfo {
            split: Some(spec),
            run_config: Some(cfg),
        },
    )?;
    let stages: Vec<Value> = ens
        .learners
        .iter()
        .map(|l| json!({"modality": l.modality, "best_epoch": l.log.best_epoch}))
        .collect();
    print_json(&json!({"bundle": a.out.display().to_string(), "stages": stages}));
    Ok(())
}

fn run_evaluate(a: &EvaluateArgs) -> Result<()> {
    let (ens, info) = BoostedEnsemble::load(&a.bundle)?;
    let fallback = info.split.map_or_else(|| a.split.spec(), Ok)?;
    let dataset = load_source(&a.source, &fallback)?;
    let spec = info.split.or(dataset.split).unwrap_or(fallback);
    let parts = crate::data::split(dataset.len(), &spec)?;
    let fusion = a.fusion.unwrap_or(ens.fusion);
    let ens = ens.with_fusion(fusion);
    let targets = dataset.labels_at(&parts.test);
    let stages = ens.stage_predictions(&dataset, &parts.test)?;
    let fused = crate::ensemble::fuse_stages(&stages, fusion)?;
    let per_learner = ens
        .learners
        .iter()
        .zip(&stages)
        .map(|(l, preds)| {
            let mu: Vec<f64> = preds.iter().map(|p| p.mu).collect();
            let sigma = preds.iter().map(|p| p.sigma).sum::<f64>() / preds.len() as f64;
            Ok(json!({"modality": l.modality, "rmse": rmse(&mu, &targets)?, "mean_sigma": sigma}))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = json!({
        "config": echo("evaluate", json!({
            "source": source_echo(&a.source),
            "bundle": a.bundle.display().to_string(),
            "split": spec,
            "fusion": fusion,
        })),
        "mode": ens.mode,
        "fusion": fusion,
        "n_test": parts.test.len(),
        "rmse": rmse(&fused, &targets)?,
        "per_learner": per_learner,
    });
    if let Some(out) = &a.out {
        write_json(out, &report)?;
    }
    print_json(&report);
    Ok(())
}

fn run_compare(a: &CompareArgs, entropy_only: bool) -> Result<()> {
    let order = order_or_default(&a.order)?;
    let seeds = parse_seeds(&a.seeds)?;
    let cfg = ProtocolConfig {
        order: order.clone(),
        train: a.hyper.config()?,
        split: a.split.spec()?,
        chain: a.chain,
        ..ProtocolConfig::default()
    };
    if a.jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let dataset = load_source(&a.source, &cfg.split)?;
    let outcome = compare(&dataset, &cfg, &seeds, a.jobs)?;
    let command = if entropy_only { "entropy" } else { "compare" };
    let config = echo(
        command,
        json!({
            "source": source_echo(&a.source),
            "split": outcome.split,
            "order": order,
            "seeds": seeds,
            "chain": chain_str(a.chain),
            "train": train_echo(&cfg.train),
            "kde": cfg.kde,
        }),
    );
    let rows = if entropy_only { &[][..] } else { &outcome.rows[..] };
    emit_reports(rows, &outcome.entropy, &config, &a.out)?;
    let mut files = vec![a.out.join(ENTROPY_FILE).display().to_string()];
    if !entropy_only {
        files.insert(0, a.out.join(RESULTS_FILE).display().to_string());
    }
    let summary: Vec<Value> = rows
        .iter()
        .map(|r| json!({"method": r.method, "mean_rmse": r.report.mean_rmse, "std_rmse": r.report.std_rmse}))
        .collect();
    let entropy: Vec<Value> = outcome
        .entropy
        .iter()
        .map(|e| json!({"mode": e.mode, "mean_entropy": e.mean_entropies()}))
        .collect();
    print_json(&json!({"files": files, "results": summary, "entropy": entropy}));
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Extract(a) => run_extract(a),
        Command::Synth(a) => run_synth(a),
        Command::Train(a) => run_train(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Compare(a) => run_compare(a, false),
        Command::Entropy(a) => run_compare(a, true),
    }
}

fn error_line(kind: ErrorKind, message: &str) -> String {
    json!({"error": {"kind": kind.as_str(), "message": message}}).to_string()
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or_default();
            let message = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{}", error_line(ErrorKind::Config, message));
            return ErrorKind::Config.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let kind = e.kind();
            eprintln!("{}", error_line(kind, &e.to_string()));
            kind.exit_code()
        }
    }
}
