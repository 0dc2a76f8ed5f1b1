//! Independent oracles used by the integration and acceptance tests.
//!
//! Everything here is written against the published recurrences directly,
//! with scalar loops and no shared code paths with the library internals it
//! checks.

// index loops are the point here: they mirror the written recurrences
#![allow(clippy::needless_range_loop, dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use irony::classifier::{loss_and_grad, MlpModel};
use irony::encoder::{EncoderConfig, EncoderParams, LstmDirParams};
use irony::parse::{ParseForest, ParseToken, Phrase};

// ----- step-by-step bi-LSTM / attention oracle ------------------------------

fn osigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One direction of one LSTM layer over a sequence of input vectors, in the
/// gate order (input, forget, cell, output). Returns the hidden state per
/// step, in sequence order.
fn oracle_lstm_direction(
    dir: &LstmDirParams,
    inputs: &[Vec<f64>],
    d: usize,
    reverse: bool,
) -> Vec<Vec<f64>> {
    let t_len = inputs.len();
    let mut hs = vec![vec![0.0; d]; t_len];
    let mut h = vec![0.0; d];
    let mut c = vec![0.0; d];
    let steps: Vec<usize> = if reverse {
        (0..t_len).rev().collect()
    } else {
        (0..t_len).collect()
    };
    let in_dim = dir.w_input.cols;
    for t in steps {
        let x = &inputs[t];
        let mut pre = vec![0.0; 4 * d];
        for (row, p) in pre.iter_mut().enumerate() {
            let mut acc = dir.bias[row];
            for k in 0..in_dim {
                acc += dir.w_input.data[row * in_dim + k] * x[k];
            }
            for k in 0..d {
                acc += dir.w_recur.data[row * d + k] * h[k];
            }
            *p = acc;
        }
        let mut nh = vec![0.0; d];
        let mut nc = vec![0.0; d];
        for j in 0..d {
            let i_g = osigmoid(pre[j]);
            let f_g = osigmoid(pre[d + j]);
            let g = pre[2 * d + j].tanh();
            let o_g = osigmoid(pre[3 * d + j]);
            nc[j] = f_g * c[j] + i_g * g;
            nh[j] = o_g * nc[j].tanh();
        }
        h = nh;
        c = nc;
        hs[t] = h.clone();
    }
    hs
}

/// Full encoder forward pass, re-derived from the architecture description:
/// tanh word projection, two stacked bi-LSTMs, skip features
/// f_t = [e_t, h1_t, h2_t], dot-product attention scores, softmax, weighted
/// sum.
pub fn oracle_encoder_forward(
    config: &EncoderConfig,
    params: &EncoderParams,
    ids: &[usize],
) -> Vec<f64> {
    let d_e = config.d_embed;
    let d = config.d_lstm;
    let embedded: Vec<Vec<f64>> = ids
        .iter()
        .map(|&id| {
            (0..d_e)
                .map(|k| params.embedding.data[id * d_e + k].tanh())
                .collect()
        })
        .collect();

    let concat = |fwd: Vec<Vec<f64>>, bwd: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        fwd.into_iter()
            .zip(bwd)
            .map(|(mut f, b)| {
                f.extend(b);
                f
            })
            .collect()
    };
    let l1 = concat(
        oracle_lstm_direction(&params.layers[0].fwd, &embedded, d, false),
        oracle_lstm_direction(&params.layers[0].bwd, &embedded, d, true),
    );
    let l2 = concat(
        oracle_lstm_direction(&params.layers[1].fwd, &l1, d, false),
        oracle_lstm_direction(&params.layers[1].bwd, &l1, d, true),
    );

    let features: Vec<Vec<f64>> = (0..ids.len())
        .map(|t| {
            let mut f = embedded[t].clone();
            f.extend(l1[t].iter());
            f.extend(l2[t].iter());
            f
        })
        .collect();
    let scores: Vec<f64> = features
        .iter()
        .map(|f| {
            f.iter()
                .zip(&params.attention)
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();

    let dim = config.feature_dim();
    let mut out = vec![0.0; dim];
    for (e, f) in exps.iter().zip(&features) {
        let alpha = e / z;
        for k in 0..dim {
            out[k] += alpha * f[k];
        }
    }
    out
}

// ----- random valid forests and brute-force grouping -------------------------

/// Builds a random valid multi-rooted forest: n <= 15 tokens, 1..=5 roots,
/// each remaining token either excluded or attached to an already-reachable
/// token (so every chain terminates at a root, acyclically).
pub fn random_forest(rng: &mut ChaCha8Rng) -> ParseForest {
    let n = rng.gen_range(1..=15usize);
    let n_roots = rng.gen_range(1..=5.min(n));
    let mut indices: Vec<usize> = (1..=n).collect();
    for i in (1..indices.len()).rev() {
        let j = rng.gen_range(0..=i);
        indices.swap(i, j);
    }
    let mut heads = vec![0i64; n + 1];
    let mut reachable: Vec<usize> = Vec::new();
    for (pos, &idx) in indices.iter().enumerate() {
        if pos < n_roots {
            heads[idx] = 0;
            reachable.push(idx);
        } else if rng.gen_bool(0.2) {
            heads[idx] = -1;
        } else {
            let head = reachable[rng.gen_range(0..reachable.len())];
            heads[idx] = head as i64;
            reachable.push(idx);
        }
    }
    ParseForest {
        tokens: (1..=n)
            .map(|i| ParseToken {
                index: i,
                form: format!("w{i}"),
                head: heads[i],
            })
            .collect(),
        text_id: None,
    }
}

/// Brute-force grouping: for each non-excluded token, walk head links to its
/// root and bucket by root.
pub fn oracle_group_phrases(forest: &ParseForest) -> Vec<Phrase> {
    let mut buckets: std::collections::BTreeMap<usize, Vec<&ParseToken>> = Default::default();
    for tok in &forest.tokens {
        if tok.head == -1 {
            continue;
        }
        let mut cur = tok;
        while cur.head > 0 {
            cur = &forest.tokens[cur.head as usize - 1];
        }
        buckets.entry(cur.index).or_default().push(tok);
    }
    buckets
        .into_iter()
        .map(|(root, mut toks)| {
            toks.sort_by_key(|t| t.index);
            Phrase::from_tokens(toks.iter().map(|t| t.form.clone()).collect(), root)
        })
        .collect()
}

// ----- finite-difference gradient check --------------------------------------

/// Max relative error between analytic gradients and central finite
/// differences over every parameter of the model.
pub fn max_grad_relative_error(model: &MlpModel, input: &[f64], label: u8, step: f64) -> f64 {
    let (_, grads) = loss_and_grad(model, input, label).unwrap();
    let mut worst: f64 = 0.0;
    let mut probe = model.clone();
    let n_layers = model.layers.len();
    for li in 0..n_layers {
        let n_w = model.layers[li].weight.data.len();
        for wi in 0..n_w + model.layers[li].bias.len() {
            let read = |m: &MlpModel| {
                if wi < n_w {
                    m.layers[li].weight.data[wi]
                } else {
                    m.layers[li].bias[wi - n_w]
                }
            };
            let write = |m: &mut MlpModel, v: f64| {
                if wi < n_w {
                    m.layers[li].weight.data[wi] = v;
                } else {
                    m.layers[li].bias[wi - n_w] = v;
                }
            };
            let orig = read(model);
            write(&mut probe, orig + step);
            let (loss_plus, _) = loss_and_grad(&probe, input, label).unwrap();
            write(&mut probe, orig - step);
            let (loss_minus, _) = loss_and_grad(&probe, input, label).unwrap();
            write(&mut probe, orig);
            let fd = (loss_plus - loss_minus) / (2.0 * step);
            let analytic = if wi < n_w {
                grads[li].weight.data[wi]
            } else {
                grads[li].bias[wi - n_w]
            };
            let scale = analytic.abs().max(fd.abs());
            if scale < 1e-7 {
                // both effectively zero; below finite-difference resolution
                continue;
            }
            worst = worst.max((analytic - fd).abs() / scale);
        }
    }
    worst
}

/// Seeded rng helper.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
