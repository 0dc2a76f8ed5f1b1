//! Encode one phrase and inspect the attention weights.
//!
//! Loads an encoder package (see `make_encoder`), runs the phrase through
//! the embedding + stacked bi-LSTM stack, and prints the attention weight
//! the pooling layer assigned to each token alongside the resulting
//! feature vector's dimensions and norm.
//!
//! Usage:
//!     cargo run --example encode_phrase -- encoder.pkg oh wonderful another monday

use std::path::PathBuf;
use std::process::exit;

use irony::encoder::{encode_tokens, encoder_attention, encoder_forward, load_encoder};
use irony::parse::Phrase;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 2 {
        eprintln!("usage: encode_phrase <encoder.pkg> <token> [token...]");
        exit(2);
    }

    let run = || -> irony::Result<()> {
        let (config, params, vocab) = load_encoder(&PathBuf::from(&args[0]))?;
        let phrase = Phrase::from_tokens(args[1..].to_vec(), 1);
        let ids = encode_tokens(&vocab, &phrase)?;
        let weights = encoder_attention(&config, &params, &ids)?;
        let vector = encoder_forward(&config, &params, &ids)?;

        println!("token            id  attention");
        for ((token, id), w) in phrase.tokens.iter().zip(&ids).zip(&weights) {
            println!("{token:<16} {id:>3}  {w:.4}");
        }
        let norm = vector.0.iter().map(|v| v * v).sum::<f64>().sqrt();
        println!("\nfeature vector: dim {}, l2 norm {norm:.4}", vector.dim());
        Ok(())
    };
    if let Err(e) = run() {
        eprintln!("error: {e}");
        exit(e.exit_code());
    }
}
