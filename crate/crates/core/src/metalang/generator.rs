use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{LangConfig, MetalangError, DEGENERATE_VARIANCE};
use crate::rng::{self, streams};

/// One sampled language: the generator weights θ for a given config and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct LangTask {
    config: LangConfig,
    seed: u64,
    /// vocab × embed, row-major.
    embedding: Vec<f64>,
    /// (order·embed) × hidden, row-major.
    hidden_w: Vec<f64>,
    hidden_b: Vec<f64>,
    /// hidden × vocab, row-major.
    out_w: Vec<f64>,
    out_b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<u32>,
    pub vocab_size: usize,
    /// Seed of the generating [`LangTask`].
    pub task_seed: u64,
}

/// Draws θ i.i.d. from N(0, theta_sigma²) on the `LANG_THETA` stream of `seed`.
pub fn sample_task(config: &LangConfig, seed: u64) -> Result<LangTask, MetalangError> {
    config.validate()?;
    let mut rng = rng::stream(seed, streams::LANG_THETA);
    let sigma = config.theta_sigma;
    let theta: Vec<f64> = (0..config.parameter_count())
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    LangTask::from_flat(config.clone(), seed, theta)
}

impl LangTask {
    /// Builds a task from explicit flat parameters (embedding, hidden weights,
    /// hidden bias, output weights, output bias, in that order).
    pub fn from_flat(config: LangConfig, seed: u64, theta: Vec<f64>) -> Result<Self, MetalangError> {
        config.validate()?;
        if theta.len() != config.parameter_count() {
            return Err(MetalangError::Config(format!(
                "expected {} parameters, got {}",
                config.parameter_count(),
                theta.len()
            )));
        }
        let (n, e, h, v) = (config.order, config.embed_dim, config.hidden_dim, config.vocab_size);
        let mut rest = theta.as_slice();
        let mut take = |len: usize| {
            let (head, tail) = rest.split_at(len);
            rest = tail;
            head.to_vec()
        };
        let embedding = take(v * e);
        let hidden_w = take(n * e * h);
        let hidden_b = take(h);
        let out_w = take(h * v);
        let out_b = take(v);
        Ok(LangTask { config, seed, embedding, hidden_w, hidden_b, out_w, out_b })
    }

    pub fn config(&self) -> &LangConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn parameter_count(&self) -> usize {
        self.embedding.len() + self.hidden_w.len() + self.hidden_b.len() + self.out_w.len() + self.out_b.len()
    }

    /// θ flattened in construction order.
    pub fn flat_parameters(&self) -> Vec<f64> {
        [&self.embedding, &self.hidden_w, &self.hidden_b, &self.out_w, &self.out_b]
            .iter()
            .flat_map(|t| t.iter().copied())
            .collect()
    }

    /// θ as little-endian bytes, for bit-exact comparisons.
    pub fn parameter_bytes(&self) -> Vec<u8> {
        self.flat_parameters().iter().flat_map(|x| x.to_le_bytes()).collect()
    }

    /// Unnormalized generator output for `context`, ordered most recent
    /// token first (`context[0]` is x_{t-1}).
    pub fn raw_logits(&self, context: &[u32]) -> Vec<f64> {
        let cfg = &self.config;
        let (e, h, v) = (cfg.embed_dim, cfg.hidden_dim, cfg.vocab_size);
        assert_eq!(context.len(), cfg.order, "context must hold exactly `order` tokens");

        let mut hidden = self.hidden_b.clone();
        for (slot, &tok) in context.iter().enumerate() {
            let tok = tok as usize;
            assert!(tok < v, "token {tok} outside vocabulary");
            let emb = &self.embedding[tok * e..(tok + 1) * e];
            for (i, &x) in emb.iter().enumerate() {
                let row = &self.hidden_w[(slot * e + i) * h..(slot * e + i + 1) * h];
                for (acc, &w) in hidden.iter_mut().zip(row) {
                    *acc += x * w;
                }
            }
        }
        let mut logits = self.out_b.clone();
        for (j, a) in hidden.iter().enumerate() {
            let a = a.tanh();
            let row = &self.out_w[j * v..(j + 1) * v];
            for (acc, &w) in logits.iter_mut().zip(row) {
                *acc += a * w;
            }
        }
        logits
    }

    /// Logits rescaled to population mean 0 and population std λ.
    /// `None` when the raw logits are (numerically) constant.
    pub fn normalized_logits(&self, context: &[u32]) -> Option<Vec<f64>> {
        normalize(&self.raw_logits(context), self.config.lambda)
    }

    /// Next-token distribution given the last `order` tokens.
    pub fn next_token_dist(&self, context: &[u32]) -> Vec<f64> {
        let v = self.config.vocab_size;
        match self.normalized_logits(context) {
            Some(z) => softmax(&z),
            None => vec![1.0 / v as f64; v],
        }
    }

    /// Context for position `t` of `tokens`: the preceding `order` tokens,
    /// most recent first, left-padded with token 0.
    pub fn context_at(&self, tokens: &[u32], t: usize) -> Vec<u32> {
        (1..=self.config.order)
            .map(|back| if back <= t { tokens[t - back] } else { 0 })
            .collect()
    }

    /// Samples a sequence of `seq_len` tokens on the `LANG_SAMPLE` stream of `seed`.
    pub fn generate_sequence(&self, seed: u64) -> TokenSequence {
        self.generate_scored(seed).0
    }

    /// Like [`generate_sequence`](Self::generate_sequence), also returning the
    /// per-position ground-truth −log p(x_t) in nats.
    pub fn generate_scored(&self, seed: u64) -> (TokenSequence, Vec<f64>) {
        self.generate_scored_len(seed, self.config.seq_len)
    }

    pub(crate) fn generate_scored_len(&self, seed: u64, len: usize) -> (TokenSequence, Vec<f64>) {
        let mut rng = rng::stream(seed, streams::LANG_SAMPLE);
        let mut tokens = Vec::with_capacity(len);
        let mut nll = Vec::with_capacity(len);
        for t in 0..len {
            let p = self.next_token_dist(&self.context_at(&tokens, t));
            let tok = sample_index(&p, rng.random::<f64>());
            nll.push(-p[tok].ln());
            tokens.push(tok as u32);
        }
        let seq = TokenSequence { tokens, vocab_size: self.config.vocab_size, task_seed: self.seed };
        (seq, nll)
    }

    /// Per-position ground-truth negative log-likelihood of `seq` in nats.
    pub fn gt_cross_entropy(&self, seq: &TokenSequence) -> Result<Vec<f64>, MetalangError> {
        if seq.vocab_size != self.config.vocab_size {
            return Err(MetalangError::VocabMismatch {
                sequence: seq.vocab_size,
                task: self.config.vocab_size,
            });
        }
        if let Some(&bad) = seq.tokens.iter().find(|&&t| t as usize >= self.config.vocab_size) {
            return Err(MetalangError::Config(format!("token {bad} outside vocabulary")));
        }
        Ok((0..seq.tokens.len())
            .map(|t| {
                let p = self.next_token_dist(&self.context_at(&seq.tokens, t));
                -p[seq.tokens[t] as usize].ln()
            })
            .collect())
    }
}

fn normalize(raw: &[f64], lambda: f64) -> Option<Vec<f64>> {
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let var = raw.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / n;
    if var < DEGENERATE_VARIANCE {
        return None;
    }
    let scale = lambda / var.sqrt();
    Some(raw.iter().map(|z| (z - mean) * scale).collect())
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|v| v / total).collect()
}

/// Inverse-CDF draw; `u` in [0, 1).
fn sample_index(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the accumulated mass: last token with mass
    p.iter().rposition(|&pi| pi > 0.0).unwrap_or(p.len() - 1)
}
