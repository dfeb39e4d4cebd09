use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{collect_episode, write_pack, RolloutConfig, RolloutError};
use crate::maze::{MazeConfig, TaskManifest};
use crate::rng::{self, derive_seed, streams, tags};

pub const CORPUS_MANIFEST: &str = "corpus.json";

/// A fixed set of pre-sampled tasks that episodes draw from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPool {
    pub manifests: Vec<TaskManifest>,
    pub seed: u64,
}

impl TaskPool {
    /// `k` distinct tasks with seeds derived from `seed`.
    pub fn sample(k: usize, config: &MazeConfig, seed: u64) -> Result<TaskPool, RolloutError> {
        if k == 0 {
            return Err(RolloutError::Config("a task pool needs at least one task".into()));
        }
        config.validate()?;
        let manifests: Vec<TaskManifest> = (0..k)
            .map(|i| TaskManifest { config: config.clone(), seed: derive_seed(seed, tags::MAZE_TASK, i as u64) })
            .collect();
        let distinct: HashSet<u64> = manifests.iter().map(|m| m.seed).collect();
        if distinct.len() != k {
            return Err(RolloutError::Config("task seed collision in pool".into()));
        }
        Ok(TaskPool { manifests, seed })
    }

    pub fn len(&self) -> usize {
        self.manifests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifests.is_empty()
    }
}

#[derive(Debug, Clone)]
pub enum CorpusSource {
    Pool(TaskPool),
    /// A fresh task for every episode.
    Procedural(MazeConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub index: usize,
    pub dir: String,
    /// Index into the pool; `None` for procedural tasks.
    pub task_id: Option<usize>,
    pub manifest: TaskManifest,
    pub episode_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub master_seed: u64,
    pub rollout: RolloutConfig,
    /// Pool size; `None` in procedural mode.
    pub pool_size: Option<usize>,
    pub pool_seed: Option<u64>,
    pub episodes: Vec<CorpusEntry>,
}

/// Task index for each of `episodes` episodes, uniform over `k`.
pub fn assign_tasks(k: usize, episodes: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng::stream(seed, streams::CORPUS_ASSIGN);
    (0..episodes).map(|_| rng.random_range(0..k)).collect()
}

fn plan(source: &CorpusSource, episodes: usize, seed: u64) -> Vec<CorpusEntry> {
    let assignment = match source {
        CorpusSource::Pool(pool) => Some(assign_tasks(pool.len(), episodes, seed)),
        CorpusSource::Procedural(_) => None,
    };
    (0..episodes)
        .map(|i| {
            let (task_id, manifest) = match source {
                CorpusSource::Pool(pool) => {
                    let id = assignment.as_ref().unwrap()[i];
                    (Some(id), pool.manifests[id].clone())
                }
                CorpusSource::Procedural(config) => (
                    None,
                    TaskManifest { config: config.clone(), seed: derive_seed(seed, tags::MAZE_TASK, i as u64) },
                ),
            };
            CorpusEntry {
                index: i,
                dir: format!("ep_{i:06}"),
                task_id,
                manifest,
                episode_seed: derive_seed(seed, tags::EPISODE, i as u64),
            }
        })
        .collect()
}

/// Collects `episodes` packs into `out_dir` plus a corpus manifest. The
/// bytes written do not depend on `jobs`.
pub fn build_corpus(
    source: &CorpusSource,
    episodes: usize,
    cfg: &RolloutConfig,
    out_dir: &Path,
    seed: u64,
    jobs: usize,
) -> Result<CorpusManifest, RolloutError> {
    if episodes == 0 {
        return Err(RolloutError::Config("episodes must be at least 1".into()));
    }
    cfg.validate()?;
    let task_len = match source {
        CorpusSource::Pool(p) => p.manifests.iter().map(|m| m.config.episode_len).min().unwrap_or(0),
        CorpusSource::Procedural(c) => c.episode_len,
    };
    if task_len < cfg.episode_len {
        return Err(RolloutError::Config(format!(
            "task episode_len {task_len} is shorter than the rollout episode_len {}",
            cfg.episode_len
        )));
    }
    let entries = plan(source, episodes, seed);
    fs::create_dir_all(out_dir).map_err(RolloutError::io(out_dir))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| RolloutError::Config(e.to_string()))?;
    pool.install(|| {
        entries.par_iter().try_for_each(|e| {
            let run = || {
                let task = e.manifest.generate()?;
                let rec = collect_episode(&task, cfg, e.episode_seed)?;
                write_pack(&rec, &out_dir.join(&e.dir))
            };
            run().map_err(|source| RolloutError::AtEpisode { index: e.index, source: Box::new(source) })
        })
    })?;
    let (pool_size, pool_seed) = match source {
        CorpusSource::Pool(p) => (Some(p.len()), Some(p.seed)),
        CorpusSource::Procedural(_) => (None, None),
    };
    let manifest = CorpusManifest { master_seed: seed, rollout: cfg.clone(), pool_size, pool_seed, episodes: entries };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    let path = out_dir.join(CORPUS_MANIFEST);
    fs::write(&path, bytes).map_err(RolloutError::io(path))?;
    Ok(manifest)
}

pub fn read_corpus_manifest(dir: &Path) -> Result<CorpusManifest, RolloutError> {
    let path = dir.join(CORPUS_MANIFEST);
    let bytes = fs::read(&path).map_err(RolloutError::io(path))?;
    Ok(serde_json::from_slice(&bytes)?)
}
