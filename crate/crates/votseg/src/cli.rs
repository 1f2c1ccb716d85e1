//! Command-line front end: `synth`, `train`, `predict`, `eval`, `crossval`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::data::{
    generate_synthetic, load_manifest, load_utterances, split_by_speaker, write_manifest,
    ManifestRecord, SyntheticConfig,
};
use crate::error::{Error, Result};
use crate::eval::{
    classification_accuracy, format_jsonl, read_predictions, tolerance_table, write_predictions,
    ArtifactHeader, Gold, ToleranceTable, DEFAULT_TAUS,
};
use crate::frontend::FeatureSpec;
use crate::nn::Model;
use crate::train::{cross_validate, predict_utterances, train, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "votseg", version, about = "Voice onset time measurement by structured segmentation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus with planted boundaries
    Synth(SynthArgs),
    /// Train a model on an annotated manifest
    Train(TrainArgs),
    /// Measure VOT for every utterance of a manifest
    Predict(PredictArgs),
    /// Score predictions against a gold manifest
    Eval(EvalArgs),
    /// Leave-one-corpus-out cross-validation
    Crossval(CrossvalArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Seed for every random choice of the run
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (or file, for predict)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub corpora: Option<usize>,
    #[arg(long)]
    pub negative_fraction: Option<f64>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
}

/// Hyperparameter overrides shared by `train` and `crossval`.
#[derive(Debug, Args)]
pub struct TrainOverrides {
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Disable the VOT-type tagger (one shared scoring head)
    #[arg(long)]
    pub no_tagger: bool,
    /// Disable the corpus adversary
    #[arg(long)]
    pub no_adversary: bool,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub epoch_size: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub overrides: TrainOverrides,
    /// Annotated manifest; split by speaker unless --valid is given
    #[arg(long)]
    pub manifest: PathBuf,
    /// Separate validation manifest
    #[arg(long)]
    pub valid: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub predictions: PathBuf,
    /// Gold manifest
    #[arg(long)]
    pub manifest: PathBuf,
    /// Comma-separated tolerances in ms
    #[arg(long, value_delimiter = ',')]
    pub taus: Option<Vec<f64>>,
    /// Corpora seen in training; adds within/unseen strata
    #[arg(long, value_delimiter = ',')]
    pub seen_corpora: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct CrossvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub overrides: TrainOverrides,
    #[arg(long)]
    pub manifest: PathBuf,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn print_config<T: Serialize>(command: &str, cfg: &T) {
    println!("# votseg {command}: resolved configuration");
    println!("{}", toml::to_string(cfg).expect("config is representable"));
}

fn train_config(common: &Common, o: &TrainOverrides) -> Result<TrainConfig> {
    let mut cfg = match &common.config {
        Some(p) => TrainConfig::load(p)?,
        None => TrainConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(l) = o.lambda {
        cfg.lambda = l;
    }
    if o.no_tagger {
        cfg.use_tagger = false;
    }
    if o.no_adversary {
        cfg.use_adversary = false;
    }
    if let Some(v) = o.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = o.max_epochs {
        cfg.max_epochs = v;
    }
    if let Some(v) = o.patience {
        cfg.patience = v;
    }
    if let Some(v) = o.epoch_size {
        cfg.epoch_size = Some(v);
    }
    if let Some(v) = o.hidden {
        cfg.hidden = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let mut cfg = match &a.common.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            toml::from_str::<SyntheticConfig>(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => SyntheticConfig::default(),
    };
    if let Some(s) = a.common.seed {
        cfg.seed = s;
    }
    if let Some(v) = a.n {
        cfg.n_utterances = v;
    }
    if let Some(v) = a.corpora {
        cfg.corpora = v;
    }
    if let Some(v) = a.negative_fraction {
        cfg.negative_fraction = v;
    }
    if let Some(v) = a.noise_sd {
        cfg.noise_sd = v;
    }
    if let Some(v) = a.dim {
        cfg.dim = v;
    }
    print_config("synth", &cfg);
    let corpus = generate_synthetic(&cfg)?;
    create_dir(&a.common.out)?;
    let records = corpus.write(&a.common.out)?;
    println!(
        "wrote {} utterances to {}",
        records.len(),
        a.common.out.join("manifest.jsonl").display()
    );
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let cfg = train_config(&a.common, &a.overrides)?;
    print_config("train", &cfg);
    let out = &a.common.out;
    create_dir(out)?;
    let records = load_manifest(&a.manifest)?;
    let (train_recs, valid_recs) = match &a.valid {
        Some(v) => (records, load_manifest(v)?),
        None => {
            let s = split_by_speaker(&records, cfg.split, cfg.seed)?;
            let dir = out.join("splits");
            create_dir(&dir)?;
            write_manifest(&dir.join("train.jsonl"), &s.train)?;
            write_manifest(&dir.join("valid.jsonl"), &s.valid)?;
            write_manifest(&dir.join("test.jsonl"), &s.test)?;
            (s.train, s.valid)
        }
    };
    let spec = FeatureSpec::default();
    let tr = load_utterances(&train_recs, &spec)?;
    let va = load_utterances(&valid_recs, &spec)?;
    let outcome = train(&tr, &va, &cfg)?;
    outcome.model.save(&out.join("model.json"))?;
    write(
        &out.join("train_log.jsonl"),
        &format_jsonl(&ArtifactHeader::new("train_log", cfg.seed), &outcome.log),
    )?;
    write(&out.join("config.toml"), &cfg.to_toml())?;
    println!(
        "trained {} epochs, best epoch {}; model written to {}",
        outcome.log.len(),
        outcome.best_epoch,
        out.join("model.json").display()
    );
    Ok(())
}

fn cmd_predict(a: &PredictArgs) -> Result<()> {
    #[derive(Serialize)]
    struct Resolved<'a> {
        seed: u64,
        model: &'a Path,
        manifest: &'a Path,
        out: &'a Path,
    }
    let seed = a.common.seed.unwrap_or(0);
    print_config(
        "predict",
        &Resolved {
            seed,
            model: &a.model,
            manifest: &a.manifest,
            out: &a.common.out,
        },
    );
    let model = Model::load(&a.model)?;
    let records = load_manifest(&a.manifest)?;
    let utts = load_utterances(&records, &FeatureSpec::default())?;
    let preds = predict_utterances(&model, &utts)?;
    if let Some(parent) = a.common.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_predictions(&a.common.out, &ArtifactHeader::new("predictions", seed), &preds)?;
    println!("wrote {} predictions to {}", preds.len(), a.common.out.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvalReport {
    seed: u64,
    type_accuracy: f64,
    table: ToleranceTable,
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let taus = a.taus.clone().unwrap_or_else(|| DEFAULT_TAUS.to_vec());
    let seed = a.common.seed.unwrap_or(0);
    #[derive(Serialize)]
    struct Resolved<'a> {
        seed: u64,
        taus: &'a [f64],
        seen_corpora: &'a Option<Vec<String>>,
    }
    print_config(
        "eval",
        &Resolved {
            seed,
            taus: &taus,
            seen_corpora: &a.seen_corpora,
        },
    );
    let preds = read_predictions(&a.predictions)?;
    let golds: Vec<Gold> = load_manifest(&a.manifest)?
        .iter()
        .map(Gold::from_record)
        .collect::<Result<_>>()?;
    let seen: Option<BTreeSet<String>> = a.seen_corpora.as_ref().map(|v| v.iter().cloned().collect());
    let table = tolerance_table(&preds, &golds, &taus, seen.as_ref())?;
    let report = EvalReport {
        seed,
        type_accuracy: classification_accuracy(&preds, &golds)?,
        table,
    };
    let text = format!(
        "{}VOT type accuracy: {:.1}%\n",
        report.table.render(),
        100.0 * report.type_accuracy
    );
    create_dir(&a.common.out)?;
    write(&a.common.out.join("report.txt"), &text)?;
    write(
        &a.common.out.join("report.json"),
        &serde_json::to_string_pretty(&report).expect("serializable"),
    )?;
    print!("{text}");
    Ok(())
}

fn cmd_crossval(a: &CrossvalArgs) -> Result<()> {
    let cfg = train_config(&a.common, &a.overrides)?;
    print_config("crossval", &cfg);
    let records: Vec<ManifestRecord> = load_manifest(&a.manifest)?;
    let utts = load_utterances(&records, &FeatureSpec::default())?;
    let folds = cross_validate(&utts, &cfg)?;
    let out = &a.common.out;
    create_dir(out)?;
    let mut text = String::new();
    for (k, f) in folds.iter().enumerate() {
        let r = &f.report;
        text.push_str(&format!(
            "fold {} (held out {}), within-corpus, type accuracy {:.1}%\n{}",
            k + 1,
            r.held_out,
            100.0 * r.within_type_accuracy,
            r.within.render()
        ));
        text.push_str(&format!(
            "fold {} (held out {}), unseen corpus, type accuracy {:.1}%\n{}\n",
            k + 1,
            r.held_out,
            100.0 * r.unseen_type_accuracy,
            r.unseen.render()
        ));
        write(
            &out.join(format!("fold{}_log.jsonl", k + 1)),
            &format_jsonl(&ArtifactHeader::new("train_log", cfg.seed), &f.log),
        )?;
    }
    #[derive(Serialize)]
    struct Report<'a> {
        seed: u64,
        folds: Vec<&'a crate::train::FoldReport>,
    }
    let report = Report {
        seed: cfg.seed,
        folds: folds.iter().map(|f| &f.report).collect(),
    };
    write(&out.join("crossval.txt"), &text)?;
    write(
        &out.join("crossval.json"),
        &serde_json::to_string_pretty(&report).expect("serializable"),
    )?;
    print!("{text}");
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Crossval(a) => cmd_crossval(a),
    }
}
