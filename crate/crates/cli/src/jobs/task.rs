use std::collections::BTreeMap;
use std::path::Path;

use icbench_core::maze::{generate_task, MazeConfig, TaskManifest};
use icbench_core::rollout::{build_corpus, CorpusSource, RolloutConfig, TaskPool};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{complete_reach_reward, require_out, write_file, Job};
use crate::error::config_error;

#[derive(Debug, Clone, Default, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct GenTaskJob {
    pub maze: MazeConfig,
    pub seed: u64,
}

impl Job for GenTaskJob {
    const COMMAND: &'static str = "maze gen-task";

    fn validate(&self) -> anyhow::Result<()> {
        Ok(self.maze.validate()?)
    }

    fn seeds(&self) -> BTreeMap<String, u64> {
        BTreeMap::from([("task".into(), self.seed)])
    }

    fn complete(user: &mut Value) -> anyhow::Result<()> {
        complete_reach_reward(user, "maze")
    }

    fn execute(&self, out: Option<&Path>) -> anyhow::Result<()> {
        let dir = require_out(out)?;
        let task = generate_task(&self.maze, self.seed)?;
        let manifest = TaskManifest { config: self.maze.clone(), seed: self.seed };
        write_file(&dir.join("task.json"), &serde_json::to_vec_pretty(&manifest)?)?;
        write_file(&dir.join("task.mzt"), &task.archive_bytes())?;
        log::info!(
            "{}×{} task: {} free cells, density {:.3}, {} PNTs",
            task.size(),
            task.size(),
            task.free_count(),
            task.actual_density,
            task.pnts.len()
        );
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct CollectJob {
    /// Task generator settings (pool tasks or procedural tasks).
    pub maze: MazeConfig,
    pub rollout: RolloutConfig,
    pub episodes: usize,
    /// Size of the fixed task pool; `null` draws a fresh task per episode.
    pub pool: Option<usize>,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for CollectJob {
    fn default() -> Self {
        CollectJob {
            maze: MazeConfig::default(),
            rollout: RolloutConfig::default(),
            episodes: 16,
            pool: None,
            seed: 0,
            jobs: 0,
        }
    }
}

impl Job for CollectJob {
    const COMMAND: &'static str = "maze collect";

    fn validate(&self) -> anyhow::Result<()> {
        self.maze.validate()?;
        self.rollout.validate()?;
        if self.episodes == 0 {
            return Err(config_error("episodes must be at least 1"));
        }
        if self.pool == Some(0) {
            return Err(config_error("pool must be at least 1 (or null for procedural tasks)"));
        }
        if self.maze.episode_len < self.rollout.episode_len {
            return Err(config_error(format!(
                "maze.episode_len {} is shorter than rollout.episode_len {}",
                self.maze.episode_len, self.rollout.episode_len
            )));
        }
        Ok(())
    }

    fn seeds(&self) -> BTreeMap<String, u64> {
        BTreeMap::from([("master".into(), self.seed)])
    }

    fn threads(&self) -> usize {
        self.jobs
    }

    fn complete(user: &mut Value) -> anyhow::Result<()> {
        complete_reach_reward(user, "maze")
    }

    fn execute(&self, out: Option<&Path>) -> anyhow::Result<()> {
        let dir = require_out(out)?;
        let source = match self.pool {
            Some(k) => CorpusSource::Pool(TaskPool::sample(k, &self.maze, self.seed)?),
            None => CorpusSource::Procedural(self.maze.clone()),
        };
        let corpus = build_corpus(&source, self.episodes, &self.rollout, dir, self.seed, self.jobs)?;
        log::info!("collected {} episodes into {}", corpus.episodes.len(), dir.display());
        Ok(())
    }
}
