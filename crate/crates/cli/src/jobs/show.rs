use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use icbench_core::agent::StepView;
use icbench_core::maze::{step, Cell, MazeConfig, MazeTask, Pos, SimState, TaskManifest};
use icbench_core::render::palette::{self, Rgb, BACKGROUND, FLOOR};
use icbench_core::render::{render_fp, render_topdown, FRAME_HEIGHT, FRAME_WIDTH, WIRE_TOPDOWN_K};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{complete_reach_reward, require_out, Job};
use crate::error::config_error;
use crate::policy::PolicySpec;

const CELL_PX: usize = 8;
const AGENT: Rgb = [255, 255, 255];
const TRAIL: Rgb = [235, 200, 90];
const WALL: Rgb = [70, 70, 78];

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct ShowJob {
    pub maze: MazeConfig,
    pub seed: u64,
    /// Steps to play; one frame is written per visited state.
    pub steps: usize,
    /// In-process policy that moves the agent: `random` or `privileged:P`.
    pub policy: String,
    pub episode_seed: u64,
}

impl Default for ShowJob {
    fn default() -> Self {
        ShowJob { maze: MazeConfig::default(), seed: 0, steps: 8, policy: "privileged:1.0".into(), episode_seed: 0 }
    }
}

pub fn write_png(path: &Path, width: usize, height: usize, rgb: &[u8]) -> anyhow::Result<()> {
    let mut enc = png::Encoder::new(BufWriter::new(File::create(path)?), width as u32, height as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut w = enc.write_header()?;
    w.write_image_data(rgb)?;
    w.finish()?;
    Ok(())
}

/// Writes `cells` (row-major, `side × side`) as blocks of `CELL_PX` pixels.
fn write_grid(path: &Path, side: usize, cells: &[Rgb]) -> anyhow::Result<()> {
    let px = side * CELL_PX;
    let mut rgb = vec![0u8; px * px * 3];
    for y in 0..px {
        for x in 0..px {
            let c = cells[(y / CELL_PX) * side + x / CELL_PX];
            rgb[(y * px + x) * 3..][..3].copy_from_slice(&c);
        }
    }
    write_png(path, px, px, &rgb)
}

fn map_cells(task: &MazeTask, trail: &[Pos], agent: Pos) -> Vec<Rgb> {
    let n = task.size();
    let mut cells: Vec<Rgb> = (0..n * n)
        .map(|i| {
            let p = Pos::new(i / n, i % n);
            match (task.cell(p), task.pnt_at(p)) {
                (Cell::Wall, _) => palette::texture_palette(task.texture(p))[0],
                (_, Some(k)) => palette::pnt_color(task.pnts[k].color),
                _ => FLOOR,
            }
        })
        .collect();
    for p in trail {
        if task.pnt_at(*p).is_none() {
            cells[p.row * n + p.col] = TRAIL;
        }
    }
    cells[agent.row * n + agent.col] = AGENT;
    cells
}

fn crop_cells(task: &MazeTask, state: &SimState) -> Vec<Rgb> {
    let obs = render_topdown(task, state, WIRE_TOPDOWN_K);
    let side = obs.side();
    (0..side * side)
        .map(|i| {
            if i == (side * side) / 2 {
                return AGENT;
            }
            match obs.cells[i].code() {
                0 => BACKGROUND,
                1 => FLOOR,
                2 => WALL,
                c => palette::pnt_color(c - 16),
            }
        })
        .collect()
}

impl Job for ShowJob {
    const COMMAND: &'static str = "maze show";

    fn validate(&self) -> anyhow::Result<()> {
        self.maze.validate()?;
        if let PolicySpec::Wire(_) = PolicySpec::parse(&self.policy)? {
            return Err(config_error("maze show drives the agent with an in-process policy"));
        }
        if self.steps >= self.maze.episode_len {
            return Err(config_error("steps must be shorter than maze.episode_len"));
        }
        Ok(())
    }

    fn seeds(&self) -> BTreeMap<String, u64> {
        BTreeMap::from([("task".into(), self.seed), ("episode".into(), self.episode_seed)])
    }

    fn complete(user: &mut Value) -> anyhow::Result<()> {
        complete_reach_reward(user, "maze")
    }

    fn execute(&self, out: Option<&Path>) -> anyhow::Result<()> {
        let dir = require_out(out)?;
        let task = TaskManifest { config: self.maze.clone(), seed: self.seed }.generate()?;
        let spec = PolicySpec::parse(&self.policy)?;
        let mut policy = spec.build(std::time::Duration::from_secs(1), icbench_core::wire::ObsKind::Frame);
        policy.begin_episode(&task, self.episode_seed)?;

        fs::create_dir_all(dir.join("frames"))?;
        fs::create_dir_all(dir.join("topdown"))?;
        let mut state = SimState::initial(&task);
        let mut last_reward = 0.0;
        let mut trail = vec![state.cell];
        for t in 0..=self.steps {
            let frame = render_fp(&task, &state);
            write_png(&dir.join(format!("frames/frame_{t:04}.png")), FRAME_WIDTH, FRAME_HEIGHT, &frame.pixels)?;
            write_grid(&dir.join(format!("topdown/crop_{t:04}.png")), 2 * WIRE_TOPDOWN_K + 1, &crop_cells(&task, &state))?;
            if t == self.steps {
                break;
            }
            let a = policy.act(&StepView { task: &task, state: &state, last_reward })?;
            let o = step(&task, &state, a)?;
            last_reward = o.reward;
            state = o.state;
            trail.push(state.cell);
        }
        write_grid(&dir.join("map.png"), task.size(), &map_cells(&task, &trail, state.cell))?;
        log::info!("wrote {} frames; accumulated reward {}", self.steps + 1, state.accumulated_reward);
        Ok(())
    }
}

