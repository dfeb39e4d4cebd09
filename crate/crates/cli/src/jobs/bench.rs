use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use icbench_core::agent::RandomPolicy;
use icbench_core::maze::{generate_task, step, MazeConfig, SimState};
use icbench_core::render::{render_fp_into, FrameRGB, FRAME_HEIGHT, FRAME_WIDTH};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{complete_reach_reward, write_file, Job};
use crate::error::config_error;

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct BenchJob {
    pub maze: MazeConfig,
    pub seed: u64,
    /// Timed frames.
    pub frames: usize,
    /// Untimed frames rendered first.
    pub warmup: usize,
}

impl Default for BenchJob {
    fn default() -> Self {
        BenchJob { maze: MazeConfig::default(), seed: 0, frames: 1000, warmup: 50 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub width: usize,
    pub height: usize,
    pub size: usize,
    pub frames: usize,
    pub seconds: f64,
    pub fps: f64,
    pub threads: usize,
}

/// Renders first-person frames along a random walk on one thread.
pub fn bench(job: &BenchJob) -> anyhow::Result<BenchReport> {
    let task = generate_task(&job.maze, job.seed)?;
    let mut policy = RandomPolicy::new(job.seed);
    let mut state = SimState::initial(&task);
    let mut frame = FrameRGB::blank();
    let mut render = |state: &mut SimState, frame: &mut FrameRGB| -> anyhow::Result<()> {
        render_fp_into(&task, state, frame);
        *state = if state.done { SimState::initial(&task) } else { step(&task, state, policy.draw())?.state };
        Ok(())
    };
    for _ in 0..job.warmup {
        render(&mut state, &mut frame)?;
    }
    let start = Instant::now();
    for _ in 0..job.frames {
        render(&mut state, &mut frame)?;
    }
    let seconds = start.elapsed().as_secs_f64();
    Ok(BenchReport {
        width: FRAME_WIDTH,
        height: FRAME_HEIGHT,
        size: task.size(),
        frames: job.frames,
        seconds,
        fps: job.frames as f64 / seconds,
        threads: 1,
    })
}

impl Job for BenchJob {
    const COMMAND: &'static str = "maze bench-fps";

    fn validate(&self) -> anyhow::Result<()> {
        self.maze.validate()?;
        if self.frames == 0 {
            return Err(config_error("frames must be positive"));
        }
        Ok(())
    }

    fn seeds(&self) -> BTreeMap<String, u64> {
        BTreeMap::from([("task".into(), self.seed)])
    }

    fn threads(&self) -> usize {
        1
    }

    fn complete(user: &mut Value) -> anyhow::Result<()> {
        complete_reach_reward(user, "maze")
    }

    fn execute(&self, out: Option<&Path>) -> anyhow::Result<()> {
        let report = bench(self)?;
        let json = serde_json::to_string_pretty(&report)?;
        println!("{json}");
        if let Some(dir) = out {
            write_file(&dir.join("bench.json"), json.as_bytes())?;
        }
        Ok(())
    }
}
