//! Glue between the corpus, parse, encoder, and classifier stages: per-tweet
//! phrase extraction, embedding backends, and slot-input assembly.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::classifier::{assemble_input, SlotConfig};
use crate::corpus::Dataset;
use crate::encoder::{
    encode_tokens, encoder_forward, lookup_precomputed, EmbeddingTable, EncoderConfig,
    EncoderParams, PhraseVector, Vocab,
};
use crate::error::{Error, Result};
use crate::parse::{
    filtered_tokens, group_phrases, heuristic_filtered_tokens, heuristic_segment, read_conll,
    Phrase,
};

/// Phrases plus the whole-tweet token sequence for one record.
#[derive(Debug, Clone)]
pub struct TweetPhrases {
    pub id: u64,
    pub phrases: Vec<Phrase>,
    pub whole_tweet: Vec<String>,
}

pub enum ParserBackend {
    /// Read parses from a CoNLL-style file; forests match records
    /// positionally unless `# id = N` comments are present.
    Conll(std::path::PathBuf),
    /// Punctuation-based fallback segmentation of the raw text.
    Heuristic,
}

pub fn extract_phrases(dataset: &Dataset, backend: &ParserBackend) -> Result<Vec<TweetPhrases>> {
    match backend {
        ParserBackend::Heuristic => Ok(dataset
            .records
            .iter()
            .map(|r| TweetPhrases {
                id: r.id,
                phrases: heuristic_segment(&r.text),
                whole_tweet: heuristic_filtered_tokens(&r.text),
            })
            .collect()),
        ParserBackend::Conll(path) => {
            let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let forests = read_conll(&raw)?;
            let by_id = forests.iter().any(|f| f.text_id.is_some());
            if by_id {
                let map: HashMap<u64, usize> = forests
                    .iter()
                    .enumerate()
                    .filter_map(|(i, f)| f.text_id.map(|id| (id, i)))
                    .collect();
                dataset
                    .records
                    .iter()
                    .map(|r| {
                        let idx = map.get(&r.id).copied().ok_or_else(|| {
                            Error::Invalid(format!("no parse block with id {}", r.id))
                        })?;
                        Ok(TweetPhrases {
                            id: r.id,
                            phrases: group_phrases(&forests[idx]),
                            whole_tweet: filtered_tokens(&forests[idx]),
                        })
                    })
                    .collect()
            } else {
                if forests.len() != dataset.records.len() {
                    return Err(Error::Invalid(format!(
                        "{} forests for {} records",
                        forests.len(),
                        dataset.records.len()
                    )));
                }
                Ok(dataset
                    .records
                    .iter()
                    .zip(&forests)
                    .map(|(r, f)| TweetPhrases {
                        id: r.id,
                        phrases: group_phrases(f),
                        whole_tweet: filtered_tokens(f),
                    })
                    .collect())
            }
        }
    }
}

pub enum EmbeddingBackend {
    Live {
        config: EncoderConfig,
        params: Box<EncoderParams>,
        vocab: Vocab,
    },
    Table(EmbeddingTable),
}

impl EmbeddingBackend {
    pub fn feature_dim(&self) -> usize {
        match self {
            EmbeddingBackend::Live { config, .. } => config.feature_dim(),
            EmbeddingBackend::Table(t) => t.feature_dim,
        }
    }

    pub fn encode(&self, phrase: &Phrase) -> Result<PhraseVector> {
        match self {
            EmbeddingBackend::Live {
                config,
                params,
                vocab,
            } => {
                let ids = encode_tokens(vocab, phrase)?;
                encoder_forward(config, params, &ids)
            }
            EmbeddingBackend::Table(table) => lookup_precomputed(table, phrase),
        }
    }
}

/// Encodes a batch of phrases, fanning out across threads with results in
/// input order. `cache` short-circuits repeated phrase texts; a table-backend
/// miss reports every missing phrase at once.
pub fn encode_phrases(
    backend: &EmbeddingBackend,
    phrases: &[Phrase],
    cache: &mut HashMap<String, PhraseVector>,
) -> Result<Vec<PhraseVector>> {
    let todo: Vec<&Phrase> = phrases
        .iter()
        .filter(|p| !cache.contains_key(&p.text()))
        .collect();
    let encoded: Vec<(String, Result<PhraseVector>)> = todo
        .par_iter()
        .map(|p| (p.text(), backend.encode(p)))
        .collect();

    let mut missing = Vec::new();
    for (text, result) in encoded {
        match result {
            Ok(v) => {
                cache.insert(text, v);
            }
            Err(Error::Invalid(_)) if matches!(backend, EmbeddingBackend::Table(_)) => {
                missing.push(text);
            }
            Err(e) => return Err(e),
        }
    }
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(Error::Invalid(format!(
            "phrases missing from precomputed table: {}",
            missing
                .iter()
                .map(|m| format!("`{m}`"))
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }
    Ok(phrases
        .iter()
        .map(|p| cache.get(&p.text()).cloned().expect("just inserted"))
        .collect())
}

/// Builds the assembled classifier input for every tweet. For variant beta
/// the whole-tweet token sequence is encoded as one extra phrase; a tweet
/// whose filtered token list is empty gets a zero whole-tweet vector.
pub fn assemble_dataset(
    backend: &EmbeddingBackend,
    tweets: &[TweetPhrases],
    slot_cfg: &SlotConfig,
    cache: &mut HashMap<String, PhraseVector>,
) -> Result<Vec<Vec<f64>>> {
    let d = backend.feature_dim();
    if d != slot_cfg.feature_dim {
        return Err(Error::Dimension(format!(
            "embedding backend dim {d} does not match slot config dim {}",
            slot_cfg.feature_dim
        )));
    }
    // flatten so encoding fans out over the whole batch at once
    let mut all_phrases: Vec<Phrase> = Vec::new();
    for tweet in tweets {
        all_phrases.extend(tweet.phrases.iter().cloned());
        if slot_cfg.include_whole_tweet && !tweet.whole_tweet.is_empty() {
            all_phrases.push(Phrase::from_tokens(tweet.whole_tweet.clone(), 1));
        }
    }
    encode_phrases(backend, &all_phrases, cache)?;

    tweets
        .iter()
        .map(|tweet| {
            let vectors: Vec<PhraseVector> = tweet
                .phrases
                .iter()
                .map(|p| cache.get(&p.text()).cloned().expect("cached above"))
                .collect();
            let whole = if slot_cfg.include_whole_tweet {
                Some(if tweet.whole_tweet.is_empty() {
                    PhraseVector(vec![0.0; d])
                } else {
                    cache
                        .get(&tweet.whole_tweet.join(" "))
                        .cloned()
                        .expect("cached above")
                })
            } else {
                None
            };
            assemble_input(&vectors, whole.as_ref(), slot_cfg)
        })
        .collect()
}

/// Writes the phrase file: one `id<TAB>phrase1<TAB>phrase2...` line per
/// tweet, empty body for zero phrases.
pub fn write_phrase_file(tweets: &[TweetPhrases], path: &Path) -> Result<()> {
    let mut out = String::new();
    for tweet in tweets {
        out.push_str(&tweet.id.to_string());
        for phrase in &tweet.phrases {
            out.push('\t');
            out.push_str(&phrase.text());
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
