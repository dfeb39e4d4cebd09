//! Demonstration episodes: a noisy behavior agent drives, a full-memory
//! reference agent labels every step.

mod collect;
mod corpus;
mod pack;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use collect::{collect_episode, draw_episode_params, replay_frames, verify_replay, EpisodeRecord, REFERENCE_P};
pub use corpus::{
    assign_tasks, build_corpus, read_corpus_manifest, CorpusEntry, CorpusManifest, CorpusSource, TaskPool,
    CORPUS_MANIFEST,
};
pub use pack::{read_pack, write_pack, PackMeta, CHUNKS, PACK_FORMAT, PACK_VERSION};

use crate::maze::MazeError;

#[derive(Debug, Error)]
pub enum RolloutError {
    #[error("invalid rollout config: {0}")]
    Config(String),
    #[error("pack version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("{chunk} is truncated: expected {expected} bytes, found {found}")]
    Truncated { chunk: &'static str, expected: u64, found: u64 },
    #[error("checksum mismatch in {chunk}")]
    Checksum { chunk: &'static str },
    #[error("{chunk} is malformed: {message}")]
    Malformed { chunk: &'static str, message: String },
    #[error("replay diverged at step {step}")]
    ReplayMismatch { step: usize },
    #[error("episode {index}")]
    AtEpisode { index: usize, source: Box<RolloutError> },
    #[error("{path}", path = path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Maze(#[from] MazeError),
}

impl RolloutError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> RolloutError {
        let path = path.into();
        move |source| RolloutError::Io { path, source }
    }
}

/// Closed interval `[lo, hi]` inside `[0, 1]`.
pub type Interval = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct RolloutConfig {
    /// Range for the behavior agent's memory-transfer probability, drawn
    /// once per episode.
    pub behavior_p_range: Interval,
    /// Range for the probability of replacing the behavior action with a
    /// uniform-random one, drawn once per episode.
    pub epsilon_range: Interval,
    pub episode_len: usize,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        RolloutConfig { behavior_p_range: [0.0, 0.5], epsilon_range: [0.0, 0.8], episode_len: 2048 }
    }
}

impl RolloutConfig {
    pub fn validate(&self) -> Result<(), RolloutError> {
        for (name, [lo, hi]) in [("behavior_p_range", self.behavior_p_range), ("epsilon_range", self.epsilon_range)] {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(RolloutError::Config(format!("{name} [{lo}, {hi}] must be an interval inside [0, 1]")));
            }
        }
        if self.episode_len == 0 {
            return Err(RolloutError::Config("episode_len must be positive".into()));
        }
        Ok(())
    }
}
