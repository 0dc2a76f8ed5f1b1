//! Command-line pipeline: `phrases`, `train`, `eval`, `predict`.
//!
//! All options live in a JSON config file and can be overridden by
//! same-named flags (flag wins). Exit codes: 0 success, 2 validation
//! error, 3 numeric failure.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::classifier::{
    load_checkpoint, save_checkpoint, train_with, MlpConfig, MlpModel, SlotConfig,
};
use crate::corpus::{load_dataset, write_predictions, Dataset};
use crate::encoder::{load_encoder, load_table, PhraseVector};
use crate::error::{Error, Result};
use crate::eval::compute_metrics;
use crate::pipeline::{
    assemble_dataset, extract_phrases, write_phrase_file, EmbeddingBackend, ParserBackend,
    TweetPhrases,
};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: Option<PathBuf>,
    pub parses: Option<PathBuf>,
    pub encoder: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// "alpha" (phrase slots only) or "beta" (plus whole-tweet vector).
    pub variant: Option<String>,
    pub slots: Option<usize>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub momentum: Option<f64>,
    pub seed: Option<u64>,
    pub shuffle: Option<bool>,
    pub val_fraction: Option<f64>,
    /// "conll" or "heuristic".
    pub parser: Option<String>,
    pub unlabeled: Option<bool>,
    /// Optional expected encoder dims, validated against the package.
    pub d_embed: Option<usize>,
    pub d_lstm: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// JSON config file; flags override its fields
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset TSV (id<TAB>label<TAB>text, or id<TAB>text with --unlabeled)
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// CoNLL-style parse file
    #[arg(long)]
    pub parses: Option<PathBuf>,
    /// Encoder tensor package
    #[arg(long)]
    pub encoder: Option<PathBuf>,
    /// Precomputed phrase-vector table (TSV)
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Trained checkpoint (eval/predict input)
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output path (phrase file, model stem, or predictions file)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = ["alpha", "beta"])]
    pub variant: Option<String>,
    /// Maximum phrase slots
    #[arg(long)]
    pub slots: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub no_shuffle: bool,
    /// Fraction of the training set held out for per-epoch validation
    #[arg(long)]
    pub val_fraction: Option<f64>,
    #[arg(long, value_parser = ["conll", "heuristic"])]
    pub parser: Option<String>,
    /// Dataset has no label column
    #[arg(long)]
    pub unlabeled: bool,
}

#[derive(Parser)]
#[command(name = "irony", about = "Irony detection pipeline", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Extract per-tweet phrases and write the phrase file
    Phrases(CommonArgs),
    /// Train the classifier, writing per-epoch checkpoints and a history table
    Train(CommonArgs),
    /// Predict a labeled dataset and report accuracy/precision/recall/F1
    Eval(CommonArgs),
    /// Predict labels only
    Predict(CommonArgs),
}

impl CommonArgs {
    /// Loads the config file (when given) and applies flag overrides.
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                serde_json::from_str(&raw)
                    .map_err(|e| Error::Invalid(format!("bad config file: {e}")))?
            }
            None => PipelineConfig::default(),
        };
        macro_rules! flag {
            ($field:ident) => {
                if self.$field.is_some() {
                    cfg.$field = self.$field.clone();
                }
            };
        }
        flag!(dataset);
        flag!(parses);
        flag!(encoder);
        flag!(table);
        flag!(model);
        flag!(out);
        flag!(variant);
        flag!(slots);
        flag!(epochs);
        flag!(lr);
        flag!(momentum);
        flag!(seed);
        flag!(val_fraction);
        flag!(parser);
        if self.no_shuffle {
            cfg.shuffle = Some(false);
        }
        if self.unlabeled {
            cfg.unlabeled = Some(true);
        }
        Ok(cfg)
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Phrases(args) => cmd_phrases(&args.resolve()?),
        Command::Train(args) => cmd_train(&args.resolve()?),
        Command::Eval(args) => cmd_eval(&args.resolve()?),
        Command::Predict(args) => cmd_predict(&args.resolve()?),
    }
}

fn required<'a, T>(opt: &'a Option<T>, name: &str) -> Result<&'a T> {
    opt.as_ref()
        .ok_or_else(|| Error::Invalid(format!("`{name}` is required (config field or flag)")))
}

fn parser_backend(cfg: &PipelineConfig) -> Result<ParserBackend> {
    match cfg.parser.as_deref() {
        Some("heuristic") => Ok(ParserBackend::Heuristic),
        Some("conll") | None => match &cfg.parses {
            Some(path) => Ok(ParserBackend::Conll(path.clone())),
            None if cfg.parser.is_none() => Ok(ParserBackend::Heuristic),
            None => Err(Error::Invalid(
                "parser backend `conll` needs `parses`".into(),
            )),
        },
        Some(other) => Err(Error::Invalid(format!("unknown parser backend `{other}`"))),
    }
}

fn embedding_backend(cfg: &PipelineConfig) -> Result<(EmbeddingBackend, String)> {
    match (&cfg.encoder, &cfg.table) {
        (Some(_), Some(_)) => Err(Error::Invalid(
            "configure exactly one embedding backend, not both `encoder` and `table`".into(),
        )),
        (None, None) => Err(Error::Invalid(
            "an embedding backend is required: `encoder` or `table`".into(),
        )),
        (Some(path), None) => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            let hash = format!("{:x}", Sha256::digest(&bytes));
            let (config, params, vocab) = load_encoder(path)?;
            if let Some(d) = cfg.d_embed {
                if d != config.d_embed {
                    return Err(Error::Dimension(format!(
                        "config d_embed {d} but package has {}",
                        config.d_embed
                    )));
                }
            }
            if let Some(d) = cfg.d_lstm {
                if d != config.d_lstm {
                    return Err(Error::Dimension(format!(
                        "config d_lstm {d} but package has {}",
                        config.d_lstm
                    )));
                }
            }
            Ok((
                EmbeddingBackend::Live {
                    config,
                    params: Box::new(params),
                    vocab,
                },
                hash,
            ))
        }
        (None, Some(path)) => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            let hash = format!("{:x}", Sha256::digest(&bytes));
            Ok((EmbeddingBackend::Table(load_table(path)?), hash))
        }
    }
}

fn slot_config(cfg: &PipelineConfig, feature_dim: usize) -> Result<SlotConfig> {
    let include_whole_tweet = match cfg.variant.as_deref() {
        Some("beta") => true,
        Some("alpha") | None => false,
        Some(other) => return Err(Error::Invalid(format!("unknown variant `{other}`"))),
    };
    Ok(SlotConfig::new(
        cfg.slots.unwrap_or(9),
        feature_dim,
        include_whole_tweet,
    ))
}

fn load_configured_dataset(cfg: &PipelineConfig, need_labels: bool) -> Result<Dataset> {
    let path = required(&cfg.dataset, "dataset")?;
    let unlabeled = cfg.unlabeled.unwrap_or(false);
    if need_labels && unlabeled {
        return Err(Error::Invalid("labels required for this command".into()));
    }
    load_dataset(path, !unlabeled)
}

pub fn cmd_phrases(cfg: &PipelineConfig) -> Result<()> {
    let dataset = load_configured_dataset(cfg, false)?;
    let tweets = extract_phrases(&dataset, &parser_backend(cfg)?)?;
    let out = required(&cfg.out, "out")?;
    write_phrase_file(&tweets, out)?;
    println!("wrote {} phrase lines to {}", tweets.len(), out.display());
    Ok(())
}

// ----- embedding cache -----------------------------------------------------

fn cache_path(out: &Path) -> PathBuf {
    let mut os = out.as_os_str().to_owned();
    os.push(".veccache.tsv");
    PathBuf::from(os)
}

fn load_cache(path: &Path, expected_hash: &str) -> HashMap<String, PhraseVector> {
    let mut cache = HashMap::new();
    let Ok(raw) = fs::read_to_string(path) else {
        return cache;
    };
    let mut lines = raw.lines();
    let Some(hash_line) = lines.next() else {
        return cache;
    };
    if hash_line.strip_prefix("#hash=") != Some(expected_hash) {
        return cache; // backend changed, cache invalid
    }
    for line in lines {
        if let Some((text, values)) = line.split_once('\t') {
            let vector: Option<Vec<f64>> =
                values.split_whitespace().map(|v| v.parse().ok()).collect();
            if let Some(v) = vector {
                cache.insert(text.to_string(), PhraseVector(v));
            }
        }
    }
    cache
}

fn save_cache(path: &Path, hash: &str, cache: &HashMap<String, PhraseVector>) -> Result<()> {
    let mut entries: Vec<(&String, &PhraseVector)> = cache.iter().collect();
    entries.sort_by_key(|(text, _)| text.as_str());
    let mut out = format!("#hash={hash}\n");
    for (text, vector) in entries {
        out.push_str(text);
        out.push('\t');
        for (i, v) in vector.0.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{v:?}").unwrap();
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

// ----- train ----------------------------------------------------------------

fn checkpoint_path(stem: &Path, epoch: usize) -> PathBuf {
    let mut os = stem.as_os_str().to_owned();
    os.push(format!(".epoch{epoch}"));
    PathBuf::from(os)
}

fn history_path(stem: &Path) -> PathBuf {
    let mut os = stem.as_os_str().to_owned();
    os.push(".history.tsv");
    PathBuf::from(os)
}

pub fn cmd_train(cfg: &PipelineConfig) -> Result<()> {
    let dataset = load_configured_dataset(cfg, true)?;
    let labels = dataset.labels()?;
    let tweets = extract_phrases(&dataset, &parser_backend(cfg)?)?;
    let (backend, hash) = embedding_backend(cfg)?;
    let slot_cfg = slot_config(cfg, backend.feature_dim())?;
    let out = required(&cfg.out, "out")?.clone();

    let cache_file = cache_path(&out);
    let mut cache = load_cache(&cache_file, &hash);
    let inputs = assemble_dataset(&backend, &tweets, &slot_cfg, &mut cache)?;
    save_cache(&cache_file, &hash, &cache)?;

    let seed = cfg.seed.unwrap_or(0);
    let mlp_cfg = MlpConfig {
        widths: MlpConfig::derive_widths(&slot_cfg),
        learning_rate: cfg.lr.unwrap_or(0.01),
        momentum: cfg.momentum.unwrap_or(0.5),
        epochs: cfg.epochs.unwrap_or(5),
        seed,
        shuffle: cfg.shuffle.unwrap_or(true),
    };

    // optional validation split: seeded shuffle, tail becomes validation
    let val_fraction = cfg.val_fraction.unwrap_or(0.0);
    if !(0.0..1.0).contains(&val_fraction) {
        return Err(Error::Invalid("val_fraction must be in [0, 1)".into()));
    }
    let n = inputs.len();
    let n_val = (val_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    if n_val > 0 {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
    }
    if n_val >= n {
        return Err(Error::Invalid(
            "validation split leaves no training data".into(),
        ));
    }
    let (train_idx, val_idx) = order.split_at(n - n_val);
    let train_inputs: Vec<Vec<f64>> = train_idx.iter().map(|&i| inputs[i].clone()).collect();
    let train_labels: Vec<u8> = train_idx.iter().map(|&i| labels[i]).collect();
    let val_inputs: Vec<Vec<f64>> = val_idx.iter().map(|&i| inputs[i].clone()).collect();
    let val_labels: Vec<u8> = val_idx.iter().map(|&i| labels[i]).collect();

    let (model, history) = train_with(
        &mlp_cfg,
        &train_inputs,
        &train_labels,
        |epoch, model, stats| {
            save_checkpoint(model, &mlp_cfg, &slot_cfg, &checkpoint_path(&out, epoch))?;
            if !val_inputs.is_empty() {
                let predicted = predict_all(model, &val_inputs)?;
                let report = compute_metrics(&predicted, &val_labels)?;
                stats.val_accuracy = Some(report.accuracy);
                stats.val_f1 = Some(report.f1);
            }
            Ok(())
        },
    )?;
    save_checkpoint(&model, &mlp_cfg, &slot_cfg, &out)?;

    let mut table = String::from("epoch\tmean_loss\ttrain_accuracy");
    if n_val > 0 {
        table.push_str("\tval_accuracy\tval_f1");
    }
    table.push('\n');
    for e in &history.epochs {
        write!(
            table,
            "{}\t{:?}\t{:?}",
            e.epoch, e.mean_loss, e.train_accuracy
        )
        .unwrap();
        if let (Some(a), Some(f1)) = (e.val_accuracy, e.val_f1) {
            write!(table, "\t{a:?}\t{f1:?}").unwrap();
        }
        table.push('\n');
    }
    let hist_file = history_path(&out);
    fs::write(&hist_file, &table).map_err(|e| Error::io(&hist_file, e))?;
    println!(
        "trained {} epochs on {} examples; model at {}, history at {}",
        mlp_cfg.epochs,
        train_inputs.len(),
        out.display(),
        hist_file.display()
    );
    Ok(())
}

fn predict_all(model: &MlpModel, inputs: &[Vec<f64>]) -> Result<Vec<u8>> {
    inputs
        .iter()
        .map(|input| crate::classifier::predict(model, input).map(|(label, _)| label))
        .collect()
}

fn predictions_for(cfg: &PipelineConfig, dataset: &Dataset) -> Result<Vec<u8>> {
    let tweets: Vec<TweetPhrases> = extract_phrases(dataset, &parser_backend(cfg)?)?;
    let (backend, hash) = embedding_backend(cfg)?;
    let model_path = required(&cfg.model, "model")?;
    let (model, _mlp_cfg, slot_cfg) = load_checkpoint(model_path)?;
    if slot_cfg.feature_dim != backend.feature_dim() {
        return Err(Error::Dimension(format!(
            "checkpoint feature dim {} does not match embedding dim {}",
            slot_cfg.feature_dim,
            backend.feature_dim()
        )));
    }
    let out = required(&cfg.out, "out")?;
    let cache_file = cache_path(out);
    let mut cache = load_cache(&cache_file, &hash);
    let inputs = assemble_dataset(&backend, &tweets, &slot_cfg, &mut cache)?;
    save_cache(&cache_file, &hash, &cache)?;
    predict_all(&model, &inputs)
}

pub fn cmd_eval(cfg: &PipelineConfig) -> Result<()> {
    let dataset = load_configured_dataset(cfg, true)?;
    let gold = dataset.labels()?;
    let predicted = predictions_for(cfg, &dataset)?;
    let out = required(&cfg.out, "out")?;
    write_predictions(&dataset, &predicted, out)?;
    let report = compute_metrics(&predicted, &gold)?;
    print!("{}", report.render_text());
    let mut json_path = out.as_os_str().to_owned();
    json_path.push(".metrics.json");
    let json_path = PathBuf::from(json_path);
    fs::write(&json_path, report.to_json()).map_err(|e| Error::io(&json_path, e))?;
    println!(
        "predictions at {}, metrics at {}",
        out.display(),
        json_path.display()
    );
    Ok(())
}

pub fn cmd_predict(cfg: &PipelineConfig) -> Result<()> {
    let dataset = load_configured_dataset(cfg, false)?;
    let predicted = predictions_for(cfg, &dataset)?;
    let out = required(&cfg.out, "out")?;
    write_predictions(&dataset, &predicted, out)?;
    println!("wrote {} predictions to {}", predicted.len(), out.display());
    Ok(())
}
