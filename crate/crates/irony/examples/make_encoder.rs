//! Build a seeded encoder package from a dataset.
//!
//! The CLI consumes encoder packages but never creates them; this is the
//! supported way to produce one. The vocabulary is collected from the
//! heuristic phrase split of the dataset and the weights are drawn from a
//! seeded stream, so the same arguments always yield a byte-identical file.
//!
//! Usage:
//!     cargo run --example make_encoder -- tweets.tsv encoder.pkg [d_embed] [d_lstm] [seed]

use std::path::PathBuf;
use std::process::exit;

use irony::corpus::load_dataset;
use irony::encoder::{build_vocab, save_encoder, EncoderConfig, EncoderParams};
use irony::pipeline::{extract_phrases, ParserBackend};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 2 {
        eprintln!("usage: make_encoder <dataset.tsv> <out.pkg> [d_embed] [d_lstm] [seed]");
        exit(2);
    }
    let dataset_path = PathBuf::from(&args[0]);
    let out = PathBuf::from(&args[1]);
    let d_embed: usize = args.get(2).map_or(16, |s| s.parse().expect("d_embed"));
    let d_lstm: usize = args.get(3).map_or(8, |s| s.parse().expect("d_lstm"));
    let seed: u64 = args.get(4).map_or(0, |s| s.parse().expect("seed"));

    let dataset = load_dataset(&dataset_path, true)
        .or_else(|_| load_dataset(&dataset_path, false))
        .unwrap_or_else(|e| {
            eprintln!("error: {e}");
            exit(e.exit_code());
        });
    let tweets = extract_phrases(&dataset, &ParserBackend::Heuristic).expect("heuristic parse");
    let phrases: Vec<_> = tweets.iter().flat_map(|t| t.phrases.clone()).collect();
    let vocab = build_vocab(&phrases, 1);

    let config = EncoderConfig::new(d_embed, d_lstm);
    let params = EncoderParams::random(&config, vocab.len(), seed);
    save_encoder(&config, &params, &vocab, &out).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit(e.exit_code());
    });

    println!(
        "wrote {} ({} vocab entries, feature dim {})",
        out.display(),
        vocab.len(),
        config.feature_dim()
    );
}
