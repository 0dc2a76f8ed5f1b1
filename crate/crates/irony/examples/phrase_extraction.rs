//! Show how tweets split into phrases.
//!
//! With a CoNLL parse file each phrase is the subtree of one root of the
//! multi-rooted dependency forest; without one a punctuation heuristic is
//! used instead, so you can compare the two side by side.
//!
//! Usage:
//!     cargo run --example phrase_extraction -- tweets.tsv [parses.conll]

use std::path::PathBuf;
use std::process::exit;

use irony::corpus::load_dataset;
use irony::pipeline::{extract_phrases, ParserBackend};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        eprintln!("usage: phrase_extraction <dataset.tsv> [parses.conll]");
        exit(2);
    }
    let backend = match args.get(1) {
        Some(p) => ParserBackend::Conll(PathBuf::from(p)),
        None => ParserBackend::Heuristic,
    };

    let run = || -> irony::Result<()> {
        let dataset = load_dataset(&PathBuf::from(&args[0]), true)
            .or_else(|_| load_dataset(&PathBuf::from(&args[0]), false))?;
        let tweets = extract_phrases(&dataset, &backend)?;
        for tweet in &tweets {
            println!("tweet {} ({} phrases)", tweet.id, tweet.phrases.len());
            for phrase in &tweet.phrases {
                println!("    {}", phrase.text());
            }
        }
        Ok(())
    };
    if let Err(e) = run() {
        eprintln!("error: {e}");
        exit(e.exit_code());
    }
}
