//! Irony detection for short texts.
//!
//! The pipeline splits a text into phrases along its multi-rooted
//! dependency parse, encodes each phrase into a fixed-width sentiment
//! feature vector with a bi-LSTM + attention encoder, and classifies the
//! concatenated, zero-padded phrase vectors with a fully connected network
//! trained by momentum SGD.
//!
//! See the `examples/` directory for runnable walkthroughs of each stage,
//! and the `irony` binary for the end-to-end command-line pipeline.

pub mod classifier;
pub mod cli;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod math;
pub mod parse;
pub mod pipeline;
pub mod tensor;

pub use error::{Error, Result};
