//! End-to-end library walkthrough on a tiny in-memory dataset.
//!
//! Covers the whole pipeline without touching the filesystem: heuristic
//! phrase extraction, a seeded encoder, slot assembly, momentum-SGD
//! training with per-epoch stats, and the final metrics report. The
//! dataset is small enough for the classifier to memorize, so the closing
//! evaluation should land at or near perfect accuracy.
//!
//! Usage:
//!     cargo run --example train_and_eval

use std::collections::HashMap;
use std::process::exit;

use irony::classifier::{predict, train, MlpConfig, SlotConfig};
use irony::corpus::{Dataset, TweetRecord};
use irony::encoder::{build_vocab, EncoderConfig, EncoderParams};
use irony::eval::compute_metrics;
use irony::pipeline::{assemble_dataset, extract_phrases, EmbeddingBackend, ParserBackend};

const TWEETS: &[(u64, u8, &str)] = &[
    (1, 1, "Love waking up to a flooded basement #blessed"),
    (2, 0, "good morning everyone"),
    (3, 1, "Great. Just great. Fantastic."),
    (4, 0, "the coffee is ready"),
    (5, 1, "oh wonderful. another monday #not"),
    (6, 0, "see you at the game tonight"),
    (7, 1, "traffic for two hours. such fun"),
    (8, 0, "dinner with friends tonight"),
];

fn run() -> irony::Result<()> {
    let dataset = Dataset {
        name: "inline".into(),
        records: TWEETS
            .iter()
            .map(|&(id, label, text)| TweetRecord {
                id,
                text: text.into(),
                label: Some(label),
            })
            .collect(),
    };
    let labels = dataset.labels()?;

    // phrase extraction (no parse file here, so the punctuation heuristic)
    let tweets = extract_phrases(&dataset, &ParserBackend::Heuristic)?;
    for tweet in &tweets {
        let texts: Vec<String> = tweet.phrases.iter().map(|p| p.text()).collect();
        println!("tweet {}: {:?}", tweet.id, texts);
    }

    // a small seeded encoder over the corpus vocabulary
    let phrases: Vec<_> = tweets.iter().flat_map(|t| t.phrases.clone()).collect();
    let vocab = build_vocab(&phrases, 1);
    let config = EncoderConfig::new(6, 4);
    let backend = EmbeddingBackend::Live {
        params: Box::new(EncoderParams::random(&config, vocab.len(), 7)),
        config,
        vocab,
    };

    // assemble fixed-width classifier inputs: 3 slots, truncate or zero-pad
    let slot_cfg = SlotConfig::new(3, backend.feature_dim(), false);
    let mut cache = HashMap::new();
    let inputs = assemble_dataset(&backend, &tweets, &slot_cfg, &mut cache)?;
    println!(
        "\n{} inputs of width {} ({} distinct phrases encoded)",
        inputs.len(),
        slot_cfg.input_dim(),
        cache.len()
    );

    let mlp_cfg = MlpConfig::new(&slot_cfg, 1500, 7);
    println!(
        "training {:?} for {} epochs",
        mlp_cfg.widths, mlp_cfg.epochs
    );
    let (model, history) = train(&mlp_cfg, &inputs, &labels)?;
    for stats in history.epochs.iter().step_by(300) {
        println!(
            "epoch {:>4}: mean loss {:.4}, train accuracy {:.3}",
            stats.epoch, stats.mean_loss, stats.train_accuracy
        );
    }

    let mut predicted = Vec::new();
    for input in &inputs {
        predicted.push(predict(&model, input)?.0);
    }
    println!("\n{}", compute_metrics(&predicted, &labels)?.render_text());
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        exit(e.exit_code());
    }
}
