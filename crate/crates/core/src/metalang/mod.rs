//! Randomized n-gram pseudo-languages.
//!
//! A language is a tiny randomly initialized MLP over the last `n` tokens.
//! Its logits are standardized to a fixed spread before the softmax, which
//! keeps every sampled language at a comparable difficulty.

mod calibrate;
mod corpus;
mod dataset;
mod generator;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use calibrate::{calibrate_sigma, estimate_difficulty, CalibrationReport, DifficultyEstimate};
pub use corpus::{CorpusMap, PUNCTUATION};
pub use dataset::{
    assign_pool_tasks, make_task_pool, read_dataset, write_dataset, write_sequences, DatasetHeader, DatasetIndex,
    DatasetMode, DatasetSpec, DatasetSummary, IndexEntry, DATASET_FILE, DATASET_MAGIC, INDEX_FILE,
};
pub use generator::{sample_task, LangTask, TokenSequence};

/// Variance below which the logit vector is treated as constant.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

/// Hidden-layer nonlinearity. Recorded in dataset metadata.
pub const NONLINEARITY: &str = "tanh";

#[derive(Debug, Error)]
pub enum MetalangError {
    #[error("invalid language config: {0}")]
    Config(String),
    #[error("vocabulary mismatch: sequence has N={sequence}, task has N={task}")]
    VocabMismatch { sequence: usize, task: usize },
    #[error("calibration failed: best theta_sigma {sigma} gives {mean_nll:.4} nats, outside [{lo}, {hi}]")]
    Calibration { sigma: f64, mean_nll: f64, lo: f64, hi: f64 },
    #[error("dataset format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct LangConfig {
    pub vocab_size: usize,
    pub order: usize,
    pub lambda: f64,
    pub theta_sigma: f64,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub seq_len: usize,
}

impl Default for LangConfig {
    fn default() -> Self {
        LangConfig {
            vocab_size: 32,
            order: 4,
            lambda: 5.0,
            theta_sigma: 1.0,
            embed_dim: 32,
            hidden_dim: 64,
            seq_len: 4096,
        }
    }
}

impl LangConfig {
    pub fn with_order(order: usize) -> Self {
        LangConfig { order, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), MetalangError> {
        let bad = |m: &str| Err(MetalangError::Config(m.to_string()));
        if self.vocab_size < 2 {
            return bad("vocab_size must be at least 2");
        }
        if self.order < 1 {
            return bad("order must be at least 1");
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be positive and finite");
        }
        if !(self.theta_sigma > 0.0 && self.theta_sigma.is_finite()) {
            return bad("theta_sigma must be positive and finite");
        }
        if self.embed_dim == 0 || self.hidden_dim == 0 || self.seq_len == 0 {
            return bad("embed_dim, hidden_dim and seq_len must be positive");
        }
        Ok(())
    }

    /// Number of generator parameters |θ|.
    pub fn parameter_count(&self) -> usize {
        let (n, e, h, v) = (self.order, self.embed_dim, self.hidden_dim, self.vocab_size);
        v * e + n * e * h + h + h * v + v
    }
}
