//! Dependency-parse handling for tweets.
//!
//! Tweet parsers emit multi-rooted forests: each utterance in a tweet has
//! its own root (head = 0), and tokens with no syntactic function (hashtags,
//! URLs, emoticons) are marked head = -1 and excluded from the tree. Tokens
//! reachable from the same root are grouped into one phrase.

use std::sync::OnceLock;

use regex::Regex;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseToken {
    /// 1-based position within the forest.
    pub index: usize,
    pub form: String,
    /// 0 = root, -1 = excluded, otherwise the head token's index.
    pub head: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseForest {
    pub tokens: Vec<ParseToken>,
    pub text_id: Option<u64>,
}

/// An ordered token span grouped under one root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phrase {
    pub tokens: Vec<String>,
    pub root_index: usize,
}

impl Phrase {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn from_tokens(tokens: Vec<String>, root_index: usize) -> Self {
        Phrase { tokens, root_index }
    }
}

/// Parses blank-line-delimited CoNLL-style blocks: tab-separated columns,
/// column 1 = index, column 2 = form, column 7 = head. Eight-column
/// (TweeboParser) and ten-column (CoNLL-X) layouts are both accepted.
/// `# id = N` comment lines attach a text id to the following block.
pub fn read_conll(input: &str) -> Result<Vec<ParseForest>> {
    let mut forests = Vec::new();
    let mut tokens: Vec<ParseToken> = Vec::new();
    let mut pending_id: Option<u64> = None;
    let mut block = 1usize;

    let mut finish = |tokens: &mut Vec<ParseToken>,
                      pending_id: &mut Option<u64>,
                      block: &mut usize|
     -> Result<()> {
        if tokens.is_empty() {
            return Ok(());
        }
        let forest = ParseForest {
            tokens: std::mem::take(tokens),
            text_id: pending_id.take(),
        };
        validate_forest(&forest, *block)?;
        forests.push(forest);
        *block += 1;
        Ok(())
    };

    for (lineno, line) in input.lines().enumerate() {
        let lineno = lineno + 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() {
            finish(&mut tokens, &mut pending_id, &mut block)?;
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "id" {
                    pending_id = value.trim().parse().ok();
                }
            }
            continue;
        }
        let cols: Vec<&str> = trimmed.split('\t').collect();
        if cols.len() < 8 {
            return Err(Error::Conll {
                block,
                line: lineno,
                reason: format!("expected >= 8 tab-separated columns, got {}", cols.len()),
            });
        }
        let index: usize = cols[0].parse().map_err(|_| Error::Conll {
            block,
            line: lineno,
            reason: format!("non-integer index `{}`", cols[0]),
        })?;
        let head: i64 = cols[6].parse().map_err(|_| Error::Conll {
            block,
            line: lineno,
            reason: format!("non-integer head `{}`", cols[6]),
        })?;
        tokens.push(ParseToken {
            index,
            form: cols[1].to_string(),
            head,
        });
    }
    finish(&mut tokens, &mut pending_id, &mut block)?;
    Ok(forests)
}

fn validate_forest(forest: &ParseForest, block: usize) -> Result<()> {
    let n = forest.tokens.len();
    for (i, tok) in forest.tokens.iter().enumerate() {
        if tok.index != i + 1 {
            return Err(Error::Conll {
                block,
                line: i + 1,
                reason: format!("non-contiguous index {} at position {}", tok.index, i + 1),
            });
        }
        match tok.head {
            -1 | 0 => {}
            h if h >= 1 && (h as usize) <= n => {
                if h as usize == tok.index {
                    return Err(Error::Conll {
                        block,
                        line: i + 1,
                        reason: format!("token {} is its own head", tok.index),
                    });
                }
            }
            h => {
                return Err(Error::Conll {
                    block,
                    line: i + 1,
                    reason: format!("head {h} out of range for {n} tokens"),
                });
            }
        }
    }
    // Every non-excluded token must reach a root without revisiting a node.
    for tok in &forest.tokens {
        if tok.head == -1 {
            continue;
        }
        let mut seen = vec![false; n + 1];
        let mut cur = tok.index;
        loop {
            if seen[cur] {
                return Err(Error::Conll {
                    block,
                    line: tok.index,
                    reason: format!("cycle detected through token {}", tok.index),
                });
            }
            seen[cur] = true;
            match forest.tokens[cur - 1].head {
                0 => break,
                -1 => {
                    return Err(Error::Conll {
                        block,
                        line: tok.index,
                        reason: format!("token {} is headed by excluded token {cur}", tok.index),
                    });
                }
                h => cur = h as usize,
            }
        }
    }
    Ok(())
}

/// Groups tokens by the root their head-chain reaches. One phrase per root,
/// phrases ordered by root index, tokens in sentence order. Excluded tokens
/// (head = -1) appear in no phrase.
pub fn group_phrases(forest: &ParseForest) -> Vec<Phrase> {
    let n = forest.tokens.len();
    // root_of[i] = root index of token i+1, or 0 for excluded tokens
    let mut root_of = vec![0usize; n];
    for tok in &forest.tokens {
        if tok.head == -1 {
            continue;
        }
        let mut cur = tok.index;
        while forest.tokens[cur - 1].head > 0 {
            cur = forest.tokens[cur - 1].head as usize;
        }
        root_of[tok.index - 1] = cur;
    }

    let mut roots: Vec<usize> = forest
        .tokens
        .iter()
        .filter(|t| t.head == 0)
        .map(|t| t.index)
        .collect();
    roots.sort_unstable();

    roots
        .into_iter()
        .map(|root| {
            let tokens = forest
                .tokens
                .iter()
                .filter(|t| t.head != -1 && root_of[t.index - 1] == root)
                .map(|t| t.form.clone())
                .collect();
            Phrase {
                tokens,
                root_index: root,
            }
        })
        .collect()
}

/// The token sequence of a forest with excluded tokens removed; the input
/// for whole-tweet embeddings.
pub fn filtered_tokens(forest: &ParseForest) -> Vec<String> {
    forest
        .tokens
        .iter()
        .filter(|t| t.head != -1)
        .map(|t| t.form.clone())
        .collect()
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^(https?://|www\.)\S+$").unwrap())
}

fn emoticon_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"^([:;=8xX][-'^o*]?[)(\[\]dDpP/\\oO3|*]+|[)(\[\]dDpP/\\oO3|*]+[-'^o*]?[:;=8]|<3+)$",
        )
        .unwrap()
    })
}

fn keep_token(tok: &str) -> bool {
    !(tok.starts_with('#')
        || tok.starts_with('@')
        || url_re().is_match(tok)
        || emoticon_re().is_match(tok))
}

/// Fallback segmenter for texts with no parse. Splits on sentence-final
/// punctuation runs and newlines, strips hashtag/mention/URL/emoticon
/// tokens, and emits one phrase per non-empty segment.
pub fn heuristic_segment(text: &str) -> Vec<Phrase> {
    let mut phrases = Vec::new();
    let mut position = 0usize;
    for segment in text.split(['.', '!', '?', '…', '\n']) {
        let tokens: Vec<String> = segment
            .split_whitespace()
            .filter(|t| keep_token(t))
            .map(|t| t.to_string())
            .collect();
        if tokens.is_empty() {
            continue;
        }
        let root_index = position + 1;
        position += tokens.len();
        phrases.push(Phrase { tokens, root_index });
    }
    phrases
}

/// All tokens the heuristic segmenter keeps, in order; the whole-tweet
/// counterpart of `filtered_tokens`.
pub fn heuristic_filtered_tokens(text: &str) -> Vec<String> {
    heuristic_segment(text)
        .into_iter()
        .flat_map(|p| p.tokens)
        .collect()
}
