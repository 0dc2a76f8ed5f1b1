//! Phrase encoder: word projection with tanh, two stacked bidirectional
//! LSTMs, and skip-connected attention pooling over the per-step
//! concatenation of the projection and both LSTM layers' outputs.
//!
//! The encoder is inference-only. Weights come from a tensor package
//! (exported or seeded-random); there is no backprop path through it.
//! An exact-match precomputed table can stand in for the live encoder.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::math::{dot, ensure_finite, sigmoid, softmax, Matrix};
use crate::parse::Phrase;
use crate::tensor;

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;

/// Token inventory. PAD = 0 and UNK = 1 are always present; unseen tokens
/// map to UNK.
#[derive(Debug, Clone)]
pub struct Vocab {
    ids: HashMap<String, usize>,
    tokens: Vec<String>,
}

impl Vocab {
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 || tokens[0] != "<pad>" || tokens[1] != "<unk>" {
            return Err(Error::Invalid(
                "vocab token list must start with <pad>, <unk>".into(),
            ));
        }
        let ids = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Vocab { ids, tokens })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lookup(&self, token: &str) -> usize {
        self.ids.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Builds a vocab from lowercased whitespace tokens. Tokens with corpus
/// frequency >= `min_count` get ids from 2 up, ordered by descending
/// frequency then lexicographically.
pub fn build_vocab(phrases: &[Phrase], min_count: usize) -> Vocab {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for phrase in phrases {
        for tok in &phrase.tokens {
            for piece in tok.split_whitespace() {
                *counts.entry(piece.to_lowercase()).or_insert(0) += 1;
            }
        }
    }
    let mut kept: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let mut tokens = vec!["<pad>".to_string(), "<unk>".to_string()];
    tokens.extend(kept.into_iter().map(|(t, _)| t));
    Vocab::from_tokens(tokens).expect("specials present")
}

/// Maps a phrase to token ids: lowercased whitespace tokens, unseen -> UNK.
pub fn encode_tokens(vocab: &Vocab, phrase: &Phrase) -> Result<Vec<usize>> {
    let text = phrase.text();
    let ids: Vec<usize> = text
        .split_whitespace()
        .map(|t| vocab.lookup(&t.to_lowercase()))
        .collect();
    if ids.is_empty() {
        return Err(Error::Invalid("cannot encode an empty phrase".into()));
    }
    Ok(ids)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderConfig {
    /// Word projection width. 256 at full scale.
    pub d_embed: usize,
    /// Per-direction LSTM width; each bi-LSTM emits 2 * d_lstm. 512 at
    /// full scale.
    pub d_lstm: usize,
}

pub const N_LSTM_LAYERS: usize = 2;

impl EncoderConfig {
    pub fn new(d_embed: usize, d_lstm: usize) -> Self {
        EncoderConfig { d_embed, d_lstm }
    }

    /// d_embed + 4 * d_lstm: the projection plus both bi-LSTM outputs.
    pub fn feature_dim(&self) -> usize {
        self.d_embed + 4 * self.d_lstm
    }
}

/// Weights for one LSTM direction. Gate order within the stacked dimension
/// is (input, forget, cell, output).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmDirParams {
    /// 4*d_lstm x input_dim
    pub w_input: Matrix,
    /// 4*d_lstm x d_lstm
    pub w_recur: Matrix,
    /// 4*d_lstm
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmParams {
    pub fwd: LstmDirParams,
    pub bwd: LstmDirParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    /// V x d_embed
    pub embedding: Matrix,
    pub layers: [BiLstmParams; N_LSTM_LAYERS],
    /// feature_dim
    pub attention: Vec<f64>,
}

fn random_dir(rng: &mut ChaCha8Rng, input_dim: usize, d_lstm: usize) -> LstmDirParams {
    let mut uniform =
        |rows: usize, cols: usize| Matrix::from_fn(rows, cols, || rng.gen_range(-0.08..0.08));
    let w_input = uniform(4 * d_lstm, input_dim);
    let w_recur = uniform(4 * d_lstm, d_lstm);
    let mut bias = vec![0.0; 4 * d_lstm];
    // forget-gate bias starts at 1.0
    for b in bias[d_lstm..2 * d_lstm].iter_mut() {
        *b = 1.0;
    }
    LstmDirParams {
        w_input,
        w_recur,
        bias,
    }
}

impl EncoderParams {
    /// Seeded random weights, uniform in [-0.08, 0.08], forget bias 1.0.
    /// For tests and small-scale runs.
    pub fn random(config: &EncoderConfig, vocab_size: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embedding = Matrix::from_fn(vocab_size, config.d_embed, || rng.gen_range(-0.08..0.08));
        let layer1 = BiLstmParams {
            fwd: random_dir(&mut rng, config.d_embed, config.d_lstm),
            bwd: random_dir(&mut rng, config.d_embed, config.d_lstm),
        };
        let layer2 = BiLstmParams {
            fwd: random_dir(&mut rng, 2 * config.d_lstm, config.d_lstm),
            bwd: random_dir(&mut rng, 2 * config.d_lstm, config.d_lstm),
        };
        let attention = (0..config.feature_dim())
            .map(|_| rng.gen_range(-0.08..0.08))
            .collect();
        EncoderParams {
            embedding,
            layers: [layer1, layer2],
            attention,
        }
    }
}

/// Fixed-width phrase feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PhraseVector(pub Vec<f64>);

impl PhraseVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// One LSTM step. Returns (h, c).
fn lstm_step(
    params: &LstmDirParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    d: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut gates = params.w_input.matvec(x);
    let rec = params.w_recur.matvec(h_prev);
    for ((g, r), b) in gates.iter_mut().zip(&rec).zip(&params.bias) {
        *g += r + b;
    }
    let mut h = vec![0.0; d];
    let mut c = vec![0.0; d];
    for j in 0..d {
        let i_gate = sigmoid(gates[j]);
        let f_gate = sigmoid(gates[d + j]);
        let g_cand = gates[2 * d + j].tanh();
        let o_gate = sigmoid(gates[3 * d + j]);
        c[j] = f_gate * c_prev[j] + i_gate * g_cand;
        h[j] = o_gate * c[j].tanh();
    }
    (h, c)
}

/// Runs one bidirectional layer over a sequence; each output step is the
/// concatenation of the forward and backward hidden states (2 * d_lstm).
fn bilstm_layer(params: &BiLstmParams, inputs: &[Vec<f64>], d: usize) -> Vec<Vec<f64>> {
    let t_len = inputs.len();
    let mut fwd = Vec::with_capacity(t_len);
    let mut h = vec![0.0; d];
    let mut c = vec![0.0; d];
    for x in inputs {
        let (nh, nc) = lstm_step(&params.fwd, x, &h, &c, d);
        h = nh;
        c = nc;
        fwd.push(h.clone());
    }
    let mut bwd = vec![Vec::new(); t_len];
    let mut h = vec![0.0; d];
    let mut c = vec![0.0; d];
    for t in (0..t_len).rev() {
        let (nh, nc) = lstm_step(&params.bwd, &inputs[t], &h, &c, d);
        h = nh;
        c = nc;
        bwd[t] = h.clone();
    }
    (0..t_len)
        .map(|t| {
            let mut step = fwd[t].clone();
            step.extend_from_slice(&bwd[t]);
            step
        })
        .collect()
}

/// Per-step skip features and their softmax attention weights.
fn forward_parts(
    config: &EncoderConfig,
    params: &EncoderParams,
    ids: &[usize],
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if ids.is_empty() {
        return Err(Error::Invalid("encoder input is empty".into()));
    }
    let vocab_size = params.embedding.rows;
    for &id in ids {
        if id >= vocab_size {
            return Err(Error::Invalid(format!(
                "token id {id} out of range for vocab of {vocab_size}"
            )));
        }
    }
    let embedded: Vec<Vec<f64>> = ids
        .iter()
        .map(|&id| params.embedding.row(id).iter().map(|v| v.tanh()).collect())
        .collect();
    let layer1 = bilstm_layer(&params.layers[0], &embedded, config.d_lstm);
    let layer2 = bilstm_layer(&params.layers[1], &layer1, config.d_lstm);

    let feature_dim = config.feature_dim();
    let features: Vec<Vec<f64>> = (0..ids.len())
        .map(|t| {
            let mut f = Vec::with_capacity(feature_dim);
            f.extend_from_slice(&embedded[t]);
            f.extend_from_slice(&layer1[t]);
            f.extend_from_slice(&layer2[t]);
            f
        })
        .collect();

    let scores: Vec<f64> = features.iter().map(|f| dot(&params.attention, f)).collect();
    ensure_finite(&scores, "attention scores")?;
    let weights = softmax(&scores);
    Ok((features, weights))
}

/// Encodes a token-id sequence into a feature vector of length
/// `config.feature_dim()`: tanh word projection, two bi-LSTM layers, then
/// softmax attention over the per-step skip features.
pub fn encoder_forward(
    config: &EncoderConfig,
    params: &EncoderParams,
    ids: &[usize],
) -> Result<PhraseVector> {
    let (features, weights) = forward_parts(config, params, ids)?;
    let mut out = vec![0.0; config.feature_dim()];
    for (alpha, f) in weights.iter().zip(&features) {
        for (o, v) in out.iter_mut().zip(f) {
            *o += alpha * v;
        }
    }
    ensure_finite(&out, "encoder output")?;
    Ok(PhraseVector(out))
}

/// The attention distribution over timesteps for a given input.
pub fn encoder_attention(
    config: &EncoderConfig,
    params: &EncoderParams,
    ids: &[usize],
) -> Result<Vec<f64>> {
    forward_parts(config, params, ids).map(|(_, weights)| weights)
}

fn dir_tensors<'a>(prefix: &str, dir: &'a LstmDirParams) -> Vec<(String, Vec<usize>, &'a [f64])> {
    vec![
        (
            format!("{prefix}.w_input"),
            vec![dir.w_input.rows, dir.w_input.cols],
            dir.w_input.data.as_slice(),
        ),
        (
            format!("{prefix}.w_recur"),
            vec![dir.w_recur.rows, dir.w_recur.cols],
            dir.w_recur.data.as_slice(),
        ),
        (
            format!("{prefix}.bias"),
            vec![dir.bias.len()],
            dir.bias.as_slice(),
        ),
    ]
}

pub fn save_encoder(
    config: &EncoderConfig,
    params: &EncoderParams,
    vocab: &Vocab,
    path: &Path,
) -> Result<()> {
    let config_json = json!({
        "kind": "encoder",
        "d_embed": config.d_embed,
        "d_lstm": config.d_lstm,
        "n_lstm_layers": N_LSTM_LAYERS,
        "vocab_size": vocab.len(),
    });
    let mut named: Vec<(String, Vec<usize>, &[f64])> = vec![(
        "embedding".to_string(),
        vec![params.embedding.rows, params.embedding.cols],
        params.embedding.data.as_slice(),
    )];
    for (i, layer) in params.layers.iter().enumerate() {
        named.extend(dir_tensors(&format!("lstm{i}.fwd"), &layer.fwd));
        named.extend(dir_tensors(&format!("lstm{i}.bwd"), &layer.bwd));
    }
    named.push((
        "attention".to_string(),
        vec![params.attention.len()],
        params.attention.as_slice(),
    ));
    let tensors: Vec<(&str, Vec<usize>, &[f64])> = named
        .iter()
        .map(|(n, s, d)| (n.as_str(), s.clone(), *d))
        .collect();
    tensor::write_package(
        path,
        "encoder",
        config_json,
        Some(vocab.tokens().to_vec()),
        &tensors,
    )
}

fn load_dir(
    pkg: &mut tensor::Package,
    prefix: &str,
    input_dim: usize,
    d_lstm: usize,
) -> Result<LstmDirParams> {
    let w_input = pkg.take(&format!("{prefix}.w_input"), &[4 * d_lstm, input_dim])?;
    let w_recur = pkg.take(&format!("{prefix}.w_recur"), &[4 * d_lstm, d_lstm])?;
    let bias = pkg.take(&format!("{prefix}.bias"), &[4 * d_lstm])?;
    Ok(LstmDirParams {
        w_input: Matrix {
            rows: 4 * d_lstm,
            cols: input_dim,
            data: w_input,
        },
        w_recur: Matrix {
            rows: 4 * d_lstm,
            cols: d_lstm,
            data: w_recur,
        },
        bias,
    })
}

pub fn load_encoder(path: &Path) -> Result<(EncoderConfig, EncoderParams, Vocab)> {
    let mut pkg = tensor::read_package(path)?;
    if pkg.manifest.format != "encoder" {
        return Err(Error::Tensor(format!(
            "expected an encoder package, found `{}`",
            pkg.manifest.format
        )));
    }
    let cfg_val = pkg.manifest.config.clone();
    let get = |key: &str| -> Result<usize> {
        cfg_val
            .get(key)
            .and_then(|v| v.as_u64())
            .map(|v| v as usize)
            .ok_or_else(|| Error::Tensor(format!("manifest missing config field `{key}`")))
    };
    let config = EncoderConfig::new(get("d_embed")?, get("d_lstm")?);
    let vocab_size = get("vocab_size")?;
    let vocab_tokens = pkg
        .manifest
        .vocab
        .clone()
        .ok_or_else(|| Error::Tensor("manifest missing vocab".into()))?;
    if vocab_tokens.len() != vocab_size {
        return Err(Error::Tensor(format!(
            "manifest vocab_size {vocab_size} but vocab list has {} tokens",
            vocab_tokens.len()
        )));
    }
    let vocab = Vocab::from_tokens(vocab_tokens)?;

    let embedding = pkg.take("embedding", &[vocab_size, config.d_embed])?;
    let layer1 = BiLstmParams {
        fwd: load_dir(&mut pkg, "lstm0.fwd", config.d_embed, config.d_lstm)?,
        bwd: load_dir(&mut pkg, "lstm0.bwd", config.d_embed, config.d_lstm)?,
    };
    let layer2 = BiLstmParams {
        fwd: load_dir(&mut pkg, "lstm1.fwd", 2 * config.d_lstm, config.d_lstm)?,
        bwd: load_dir(&mut pkg, "lstm1.bwd", 2 * config.d_lstm, config.d_lstm)?,
    };
    let attention = pkg.take("attention", &[config.feature_dim()])?;
    let params = EncoderParams {
        embedding: Matrix {
            rows: vocab_size,
            cols: config.d_embed,
            data: embedding,
        },
        layers: [layer1, layer2],
        attention,
    };
    Ok((config, params, vocab))
}

/// Precomputed phrase-vector table keyed by exact phrase text.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    pub feature_dim: usize,
    vectors: HashMap<String, PhraseVector>,
}

impl EmbeddingTable {
    pub fn new(feature_dim: usize) -> Self {
        EmbeddingTable {
            feature_dim,
            vectors: HashMap::new(),
        }
    }

    pub fn insert(&mut self, text: String, vector: PhraseVector) -> Result<()> {
        if vector.dim() != self.feature_dim {
            return Err(Error::Dimension(format!(
                "table vector for `{text}` has dim {}, table dim is {}",
                vector.dim(),
                self.feature_dim
            )));
        }
        self.vectors.insert(text, vector);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Exact-string lookup; a miss is an error, never a silent zero vector.
pub fn lookup_precomputed(table: &EmbeddingTable, phrase: &Phrase) -> Result<PhraseVector> {
    let text = phrase.text();
    table
        .vectors
        .get(&text)
        .cloned()
        .ok_or_else(|| Error::Invalid(format!("phrase not in precomputed table: `{text}`")))
}

/// Reads a precomputed table: first line `#dim=<feature_dim>`, then
/// `phrase_text<TAB>v1 v2 ...` with space-separated decimal floats.
pub fn load_table(path: &Path) -> Result<EmbeddingTable> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = raw.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Invalid(format!("empty table file {}", path.display())))?;
    let dim: usize = header
        .strip_prefix("#dim=")
        .and_then(|d| d.trim().parse().ok())
        .ok_or_else(|| Error::Invalid("table must start with `#dim=<n>`".into()))?;
    let mut table = EmbeddingTable::new(dim);
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (text, values) = line.split_once('\t').ok_or_else(|| {
            Error::Invalid(format!("table line {}: missing tab separator", lineno + 2))
        })?;
        let vector: Vec<f64> = values
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Invalid(format!("table line {}: {e}", lineno + 2)))?;
        table.insert(text.to_string(), PhraseVector(vector))?;
    }
    Ok(table)
}

/// Writes a precomputed table in the format `load_table` reads. Entries are
/// sorted by phrase text so output is deterministic.
pub fn save_table(table: &EmbeddingTable, path: &Path) -> Result<()> {
    use std::fmt::Write as _;
    let mut entries: Vec<(&String, &PhraseVector)> = table.vectors.iter().collect();
    entries.sort_by_key(|(text, _)| text.as_str());
    let mut out = String::new();
    writeln!(out, "#dim={}", table.feature_dim).unwrap();
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
