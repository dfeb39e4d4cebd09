//! Maze tasks and their discrete dynamics.

mod gen;
mod path;
mod sim;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gen::generate_task;
pub use path::{bfs_distances, count_free_edges, free_cells_connected, shortest_path};
pub use sim::{step, SimState, StepEvents, StepOutcome};

/// Distinct PNT colors available to one task.
pub const NUM_COLORS: usize = 16;
/// Procedural wall textures.
pub const NUM_TEXTURES: usize = 32;

#[derive(Debug, Error, PartialEq)]
pub enum MazeError {
    #[error("invalid maze config: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("action id {0} outside 0..=4")]
    Protocol(u8),
    #[error("episode already finished at step {0}")]
    Finished(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TaskType {
    Navigation,
    Survival,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MazeConfig {
    /// Cells per side, odd and at least 7.
    pub size: usize,
    pub obstacle_density: f64,
    pub num_pnts: usize,
    pub cell_size: f64,
    pub ceiling_height: f64,
    pub view_height: f64,
    pub view_range: f64,
    pub step_cost: f64,
    pub reach_reward: f64,
    pub episode_len: usize,
    pub task_type: TaskType,
    /// Horizontal field of view of the rendered camera, degrees.
    #[serde(default = "default_fov")]
    pub fov_deg: f64,
}

fn default_fov() -> f64 {
    90.0
}

/// Reach rewards shipped for the standard maze sizes.
pub fn default_reach_reward(size: usize) -> Option<f64> {
    match size {
        15 => Some(0.57),
        25 => Some(1.24),
        35 => Some(2.06),
        _ => None,
    }
}

impl Default for MazeConfig {
    fn default() -> Self {
        MazeConfig::for_size(15).expect("15 has a default reward")
    }
}

impl MazeConfig {
    /// Defaults for one of the standard sizes (15, 25, 35). Other sizes have
    /// no known reach reward; use [`MazeConfig::with_reward`].
    pub fn for_size(size: usize) -> Result<Self, MazeError> {
        let reward = default_reach_reward(size).ok_or_else(|| {
            MazeError::Config(format!("no default reach_reward for size {size}; set it explicitly"))
        })?;
        Ok(MazeConfig::with_reward(size, reward))
    }

    pub fn with_reward(size: usize, reach_reward: f64) -> Self {
        MazeConfig {
            size,
            obstacle_density: 0.36,
            num_pnts: 10,
            cell_size: 2.0,
            ceiling_height: 3.2,
            view_height: 1.6,
            view_range: 12.0,
            step_cost: 0.0,
            reach_reward,
            episode_len: 2048,
            task_type: TaskType::Navigation,
            fov_deg: default_fov(),
        }
    }

    pub fn validate(&self) -> Result<(), MazeError> {
        let bad = |m: String| Err(MazeError::Config(m));
        if self.size < 7 || self.size % 2 == 0 {
            return bad(format!("size must be odd and >= 7, got {}", self.size));
        }
        if !(0.0..=1.0).contains(&self.obstacle_density) {
            return bad("obstacle_density must lie in [0, 1]".into());
        }
        if self.num_pnts == 0 || self.num_pnts > NUM_COLORS {
            return bad(format!("num_pnts must be in 1..={NUM_COLORS}"));
        }
        if !(self.cell_size > 0.0) || !(self.view_range > self.cell_size) {
            return bad("need cell_size > 0 and view_range > cell_size".into());
        }
        if !(self.ceiling_height > 0.0 && self.view_height > 0.0 && self.view_height < self.ceiling_height) {
            return bad("need 0 < view_height < ceiling_height".into());
        }
        if !(self.step_cost >= 0.0) || !self.reach_reward.is_finite() {
            return bad("step_cost must be >= 0 and reach_reward finite".into());
        }
        if self.episode_len == 0 {
            return bad("episode_len must be positive".into());
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return bad("fov_deg must be in (0, 180)".into());
        }
        Ok(())
    }

    /// Interior (non-boundary) cell count.
    pub fn interior_cells(&self) -> usize {
        (self.size - 2) * (self.size - 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Free,
    Wall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub row: usize,
    pub col: usize,
}

impl Pos {
    pub const fn new(row: usize, col: usize) -> Self {
        Pos { row, col }
    }

    /// 4-neighbours that stay inside an `n`×`n` grid.
    pub fn neighbors(self, n: usize) -> impl Iterator<Item = Pos> {
        Heading::ALL.into_iter().filter_map(move |h| self.offset(h, n))
    }

    pub fn offset(self, heading: Heading, n: usize) -> Option<Pos> {
        let (dr, dc) = heading.delta();
        let r = self.row as isize + dr;
        let c = self.col as isize + dc;
        (r >= 0 && c >= 0 && (r as usize) < n && (c as usize) < n).then(|| Pos::new(r as usize, c as usize))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    N,
    E,
    S,
    W,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::N, Heading::E, Heading::S, Heading::W];

    /// (row, col) step.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Heading::N => (-1, 0),
            Heading::E => (0, 1),
            Heading::S => (1, 0),
            Heading::W => (0, -1),
        }
    }

    pub fn left(self) -> Heading {
        Heading::ALL[(self as usize + 3) % 4]
    }

    pub fn right(self) -> Heading {
        Heading::ALL[(self as usize + 1) % 4]
    }

    pub fn reverse(self) -> Heading {
        Heading::ALL[(self as usize + 2) % 4]
    }

    pub fn index(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum ActionId {
    Forward = 0,
    Backward = 1,
    Stop = 2,
    TurnLeft = 3,
    TurnRight = 4,
}

impl ActionId {
    pub const ALL: [ActionId; 5] =
        [ActionId::Forward, ActionId::Backward, ActionId::Stop, ActionId::TurnLeft, ActionId::TurnRight];

    pub fn as_u8(self) -> u8 {
        self as u8
    }
}

impl TryFrom<u8> for ActionId {
    type Error = MazeError;

    fn try_from(v: u8) -> Result<Self, MazeError> {
        ActionId::ALL.get(v as usize).copied().ok_or(MazeError::Protocol(v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pnt {
    pub pos: Pos,
    pub color: u8,
    /// Reward on entry in SURVIVAL tasks; zero for NAVIGATION.
    pub hidden_reward: f64,
}

/// Canonical serialized form of a task: everything else regenerates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct TaskManifest {
    pub config: MazeConfig,
    pub seed: u64,
}

impl TaskManifest {
    pub fn generate(&self) -> Result<MazeTask, MazeError> {
        generate_task(&self.config, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MazeTask {
    pub config: MazeConfig,
    pub seed: u64,
    pub grid: Vec<Cell>,
    /// Texture id per cell; meaningful for WALL cells only.
    pub wall_texture: Vec<u8>,
    pub pnts: Vec<Pnt>,
    pub commands: Vec<u8>,
    pub start: Pos,
    pub start_heading: Heading,
    /// Interior WALL fraction actually reached.
    pub actual_density: f64,
}

const ARCHIVE_MAGIC: &[u8; 4] = b"MZT1";

impl MazeTask {
    pub fn size(&self) -> usize {
        self.config.size
    }

    pub fn manifest(&self) -> TaskManifest {
        TaskManifest { config: self.config.clone(), seed: self.seed }
    }

    pub fn cell(&self, p: Pos) -> Cell {
        self.grid[p.row * self.config.size + p.col]
    }

    pub fn is_free(&self, p: Pos) -> bool {
        self.cell(p) == Cell::Free
    }

    pub fn texture(&self, p: Pos) -> u8 {
        self.wall_texture[p.row * self.config.size + p.col]
    }

    pub fn pnt_at(&self, p: Pos) -> Option<usize> {
        self.pnts.iter().position(|q| q.pos == p)
    }

    pub fn pnt_by_color(&self, color: u8) -> Option<&Pnt> {
        self.pnts.iter().find(|q| q.color == color)
    }

    /// Commanded color at command index `i`.
    pub fn command(&self, i: usize) -> u8 {
        self.commands[i.min(self.commands.len() - 1)]
    }

    pub fn free_count(&self) -> usize {
        self.grid.iter().filter(|&&c| c == Cell::Free).count()
    }

    /// Expanded archival encoding: manifest JSON followed by the generated
    /// grid, textures, PNTs, commands and start pose.
    pub fn archive_bytes(&self) -> Vec<u8> {
        let manifest = serde_json::to_vec(&self.manifest()).expect("manifest serializes");
        let mut out = Vec::new();
        out.extend_from_slice(ARCHIVE_MAGIC);
        out.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
        out.extend_from_slice(&manifest);
        out.extend(self.grid.iter().map(|&c| (c == Cell::Wall) as u8));
        out.extend_from_slice(&self.wall_texture);
        out.extend_from_slice(&(self.pnts.len() as u32).to_le_bytes());
        for p in &self.pnts {
            out.extend_from_slice(&(p.pos.row as u32).to_le_bytes());
            out.extend_from_slice(&(p.pos.col as u32).to_le_bytes());
            out.push(p.color);
            out.extend_from_slice(&p.hidden_reward.to_le_bytes());
        }
        out.extend_from_slice(&(self.commands.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.commands);
        out.extend_from_slice(&(self.start.row as u32).to_le_bytes());
        out.extend_from_slice(&(self.start.col as u32).to_le_bytes());
        out.push(self.start_heading.index());
        out.extend_from_slice(&self.actual_density.to_le_bytes());
        out
    }

    /// Decodes [`archive_bytes`](Self::archive_bytes) and checks that the
    /// embedded grid agrees with regeneration from the manifest.
    pub fn from_archive_bytes(bytes: &[u8]) -> Result<MazeTask, MazeError> {
        let err = |m: &str| MazeError::Argument(format!("task archive: {m}"));
        if bytes.len() < 8 || &bytes[..4] != ARCHIVE_MAGIC {
            return Err(err("bad magic"));
        }
        let len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let json = bytes.get(8..8 + len).ok_or_else(|| err("truncated manifest"))?;
        let manifest: TaskManifest = serde_json::from_slice(json).map_err(|e| err(&e.to_string()))?;
        let task = manifest.generate()?;
        if task.archive_bytes() != bytes {
            return Err(err("embedded data disagrees with regenerated task"));
        }
        Ok(task)
    }
}
