//! Reset/step environment surface over the maze engine, mirroring the
//! conventions of standard RL environment APIs.

use crate::maze::{generate_task, step, ActionId, MazeConfig, MazeError, MazeTask, SimState, StepEvents};
use crate::render::{render_fp, render_topdown, WIRE_TOPDOWN_K};
use crate::wire::ObsKind;

pub const NUM_ACTIONS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvInfo {
    pub command: u8,
    pub step: usize,
    pub events: Option<StepEvents>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<u8>,
    pub reward: f64,
    /// Tasks never terminate early.
    pub terminated: bool,
    /// Set once the episode length is reached.
    pub truncated: bool,
    pub info: EnvInfo,
}

#[derive(Debug, Clone)]
pub struct MazeEnv {
    config: MazeConfig,
    obs_kind: ObsKind,
    task: Option<MazeTask>,
    state: Option<SimState>,
}

impl MazeEnv {
    pub fn new(config: MazeConfig, obs_kind: ObsKind) -> Result<MazeEnv, MazeError> {
        config.validate()?;
        Ok(MazeEnv { config, obs_kind, task: None, state: None })
    }

    /// Observation shape: `[128, 128, 3]` frames or a `[11, 11]` crop.
    pub fn observation_shape(&self) -> Vec<usize> {
        match self.obs_kind {
            ObsKind::Frame => vec![128, 128, 3],
            ObsKind::TopDown => vec![2 * WIRE_TOPDOWN_K + 1; 2],
        }
    }

    pub fn task(&self) -> Option<&MazeTask> {
        self.task.as_ref()
    }

    pub fn state(&self) -> Option<&SimState> {
        self.state.as_ref()
    }

    /// Generates the task for `seed` and returns the first observation.
    pub fn reset(&mut self, seed: u64) -> Result<(Vec<u8>, EnvInfo), MazeError> {
        let task = generate_task(&self.config, seed)?;
        Ok(self.reset_task(task))
    }

    pub fn reset_task(&mut self, task: MazeTask) -> (Vec<u8>, EnvInfo) {
        let state = SimState::initial(&task);
        let info = EnvInfo { command: state.command(&task), step: 0, events: None };
        self.task = Some(task);
        self.state = Some(state);
        (self.observation(), info)
    }

    fn observation(&self) -> Vec<u8> {
        let (task, state) = (self.task.as_ref().unwrap(), self.state.as_ref().unwrap());
        match self.obs_kind {
            ObsKind::Frame => render_fp(task, state).pixels,
            ObsKind::TopDown => render_topdown(task, state, WIRE_TOPDOWN_K).to_bytes(),
        }
    }

    pub fn step(&mut self, action: ActionId) -> Result<Transition, MazeError> {
        let (Some(task), Some(state)) = (&self.task, &self.state) else {
            return Err(MazeError::Argument("step before reset".into()));
        };
        let out = step(task, state, action)?;
        let info = EnvInfo { command: out.state.command(task), step: out.state.step_index, events: Some(out.events) };
        let truncated = out.state.done;
        self.state = Some(out.state);
        Ok(Transition { observation: self.observation(), reward: out.reward, terminated: false, truncated, info })
    }
}
