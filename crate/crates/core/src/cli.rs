//! Command-line front end: argument parsing, commands and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::data_model::{generate_synthetic_cohort, load_cohort, save_cohort, Profile, Split, SynthConfig};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::train_eval::{diagnose, evaluate, rank_categories, train, TrainConfig};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const METRICS_FILE: &str = "metrics.txt";

#[derive(Debug, Parser)]
#[command(name = "riskgraph", version, about = "Suicide-risk detection over personal knowledge graphs")]
pub struct Cli {
    /// Worker cap. Computation is single-threaded, so only 1 is meaningful.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic cohort.
    Synth(SynthArgs),
    /// Train a model and write it with its training log.
    Train(TrainArgs),
    /// Score a split with a saved model.
    Eval(EvalArgs),
    /// Rank properties and categories by information gain.
    Infogain(InfoGainArgs),
    /// Class probabilities and attention weights for one user.
    Predict(PredictArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Weibo,
    Reddit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Validation,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Split {
        match s {
            SplitArg::Validation => Split::Validation,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 600)]
    pub users: usize,
    /// Share of at-risk users (weibo profile only).
    #[arg(long, default_value_t = 0.5)]
    pub balance: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "weibo")]
    pub profile: ProfileArg,
    /// Write into a non-empty directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
}

#[derive(Debug, Args)]
pub struct InfoGainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Use the model's predictions as labels.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub user: String,
}

/// Provenance record written next to every command's outputs.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub version: String,
    pub started: String,
    pub finished: String,
}

impl RunManifest {
    fn new(command: &str, started: String) -> Self {
        RunManifest {
            command: command.to_string(),
            config: serde_json::Value::Null,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            seed: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started,
            finished: String::new(),
        }
    }

    fn input(mut self, key: &str, path: &Path) -> Self {
        self.inputs.insert(key.to_string(), path.display().to_string());
        self
    }

    fn output(mut self, key: &str, path: &Path) -> Self {
        self.outputs.insert(key.to_string(), path.display().to_string());
        self
    }

    /// Write `dir/manifest.json` through a temporary file and a rename.
    pub fn write(mut self, dir: &Path) -> Result<()> {
        self.finished = now();
        let text = serde_json::to_string_pretty(&self)
            .map_err(|e| Error::format("manifest", e.to_string()))?;
        write_atomic(&dir.join(MANIFEST_FILE), text.as_bytes())
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = parent_dir(path);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let name = path.file_name().map_or_else(|| "out".into(), |n| n.to_string_lossy().into_owned());
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn to_json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).unwrap_or(serde_json::Value::Null)
}

/// Run one parsed command. Text meant for stdout is returned.
pub fn run(cli: Cli) -> Result<String> {
    if cli.threads == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    if cli.threads > 1 {
        log::info!("--threads {}: running single-threaded", cli.threads);
    }
    let started = now();
    match cli.command {
        Command::Synth(a) => synth(a, started),
        Command::Train(a) => train_cmd(a, started),
        Command::Eval(a) => eval_cmd(a, started),
        Command::Infogain(a) => infogain_cmd(a, started),
        Command::Predict(a) => {
            let model = Model::load(&a.model)?;
            let dataset = load_cohort(&a.data)?;
            Ok(diagnose(&model, &dataset, &a.user)?.to_string())
        }
    }
}

fn synth(a: SynthArgs, started: String) -> Result<String> {
    if a.users < 4 {
        return Err(Error::Validation(format!("--users must be at least 4, got {}", a.users)));
    }
    if !(0.0..=1.0).contains(&a.balance) {
        return Err(Error::Validation(format!("--balance must lie in [0, 1], got {}", a.balance)));
    }
    if !a.force && fs::read_dir(&a.out).is_ok_and(|mut d| d.next().is_some()) {
        return Err(Error::Validation(format!(
            "{} exists and is not empty; pass --force to overwrite",
            a.out.display()
        )));
    }
    let (profile, config) = match a.profile {
        ProfileArg::Weibo => (Profile::Weibo, SynthConfig::weibo(a.users, a.balance)),
        ProfileArg::Reddit => (Profile::Reddit, SynthConfig::reddit(a.users)),
    };
    let dataset = generate_synthetic_cohort(&config, a.seed)?;
    save_cohort(&dataset, &a.out)?;
    let mut m = RunManifest::new("synth", started).output("cohort", &a.out);
    m.seed = Some(a.seed);
    m.config = serde_json::json!({
        "users": a.users,
        "balance": a.balance,
        "profile": format!("{profile:?}").to_lowercase(),
        "split": config.split,
    });
    m.write(&a.out)?;
    Ok(format!("wrote {} users to {}\n", dataset.users.len(), a.out.display()))
}

fn train_cmd(a: TrainArgs, started: String) -> Result<String> {
    let mut config = match &a.config {
        Some(path) => TrainConfig::load(path)?,
        None => TrainConfig::default(),
    };
    config.apply_env_overrides()?;
    let dataset = load_cohort(&a.data)?;
    let outcome = train(&dataset, &config)?;
    let dir = parent_dir(&a.model_out);
    outcome.model.save(&a.model_out)?;
    let log_path = dir.join(TRAIN_LOG_FILE);
    write_atomic(&log_path, outcome.log_csv().as_bytes())?;

    let mut m = RunManifest::new("train", started).input("data", &a.data);
    if let Some(c) = &a.config {
        m = m.input("config", c);
    }
    m = m.output("model", &a.model_out).output("train_log", &log_path);
    m.seed = Some(config.train.seed);
    m.config = to_json(&config);
    m.write(&dir)?;
    Ok(format!(
        "best epoch {} of {}; model written to {}\n",
        outcome.best_epoch,
        config.train.epochs,
        a.model_out.display()
    ))
}

fn eval_cmd(a: EvalArgs, started: String) -> Result<String> {
    let model = Model::load(&a.model)?;
    let dataset = load_cohort(&a.data)?;
    let split: Split = a.split.into();
    let evaluation = evaluate(&model, &dataset, split)?;
    let text = evaluation.report.to_text(&evaluation.confusion);
    let dir = parent_dir(&a.model).join(format!("eval_{split}"));
    let metrics_path = dir.join(METRICS_FILE);
    write_atomic(&metrics_path, text.as_bytes())?;
    let mut m = RunManifest::new("eval", started)
        .input("data", &a.data)
        .input("model", &a.model)
        .output("metrics", &metrics_path);
    m.config = serde_json::json!({ "split": split.to_string() });
    m.write(&dir)?;
    Ok(text)
}

fn infogain_cmd(a: InfoGainArgs, started: String) -> Result<String> {
    let dataset = load_cohort(&a.data)?;
    let model = a.model.as_deref().map(Model::load).transpose()?;
    let report = rank_categories(&dataset, model.as_ref())?;
    write_atomic(&a.out, report.to_csv().as_bytes())?;
    let mut m = RunManifest::new("infogain", started).input("data", &a.data);
    if let Some(p) = &a.model {
        m = m.input("model", p);
    }
    m = m.output("gains", &a.out);
    m.config = serde_json::json!({ "labels": if model.is_some() { "model" } else { "dataset" } });
    m.write(&parent_dir(&a.out))?;
    let mut text = String::new();
    for (c, g) in &report.categories {
        text.push_str(&format!("{c} {g:.6}\n"));
    }
    Ok(text)
}
