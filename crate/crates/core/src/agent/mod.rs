//! Reference agents and the in-process policy interface.

mod memory;
mod privileged;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use memory::{OccupancyMemory, STM_SLOTS};
pub use privileged::{AgentPlan, PlanMode, PrivilegedAgent};

use crate::maze::{ActionId, MazeTask, SimState};
use crate::render::{render_fp, visible_cells, FrameRGB};
use crate::rng::{self, derive_seed, streams, tags};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("policy protocol violation at step {step}: {message}")]
    Protocol { step: usize, message: String },
    #[error("policy transport failed at step {step}: {message}")]
    Transport { step: usize, message: String },
}

/// What a policy is shown at one step.
///
/// In-process reference agents may use the task for their line-of-sight
/// queries; external policies only ever see [`StepView::frame`].
pub struct StepView<'a> {
    pub task: &'a MazeTask,
    pub state: &'a SimState,
    /// Reward received on the transition into `state`.
    pub last_reward: f64,
}

impl StepView<'_> {
    pub fn frame(&self) -> FrameRGB {
        render_fp(self.task, self.state)
    }

    pub fn command(&self) -> u8 {
        self.state.command(self.task)
    }
}

pub trait Policy: Send {
    fn name(&self) -> String;
    fn begin_episode(&mut self, task: &MazeTask, seed: u64) -> Result<(), PolicyError>;
    fn act(&mut self, view: &StepView<'_>) -> Result<ActionId, PolicyError>;
    fn end_episode(&mut self, _final_state: &SimState) -> Result<(), PolicyError> {
        Ok(())
    }
}

/// Uniform over the five actions, independent of observations.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy { rng: rng::stream(seed, streams::AGENT_RANDOM) }
    }

    pub fn draw(&mut self) -> ActionId {
        random_action(&mut self.rng)
    }
}

pub fn random_action(rng: &mut impl Rng) -> ActionId {
    ActionId::ALL[rng.random_range(0..ActionId::ALL.len())]
}

impl Policy for RandomPolicy {
    fn name(&self) -> String {
        "random".into()
    }

    fn begin_episode(&mut self, _task: &MazeTask, seed: u64) -> Result<(), PolicyError> {
        *self = RandomPolicy::new(seed);
        Ok(())
    }

    fn act(&mut self, _view: &StepView<'_>) -> Result<ActionId, PolicyError> {
        Ok(self.draw())
    }
}

/// Memory RNG for step `step` of the episode seeded by `seed`.
pub fn memory_rng(seed: u64, step: usize) -> ChaCha8Rng {
    rng::stream(derive_seed(seed, tags::STEP, step as u64), streams::AGENT_MEMORY)
}

/// [`PrivilegedAgent`] wrapped as a [`Policy`]: observes its line of sight,
/// then acts.
#[derive(Debug, Clone)]
pub struct PrivilegedPolicy {
    p_transfer: f64,
    seed: u64,
    agent: Option<PrivilegedAgent>,
}

impl PrivilegedPolicy {
    pub fn new(p_transfer: f64) -> Self {
        PrivilegedPolicy { p_transfer, seed: 0, agent: None }
    }

    pub fn agent(&self) -> Option<&PrivilegedAgent> {
        self.agent.as_ref()
    }
}

impl Policy for PrivilegedPolicy {
    fn name(&self) -> String {
        format!("privileged:{}", self.p_transfer)
    }

    fn begin_episode(&mut self, task: &MazeTask, seed: u64) -> Result<(), PolicyError> {
        self.seed = seed;
        self.agent = Some(PrivilegedAgent::new(task.size(), self.p_transfer));
        Ok(())
    }

    fn act(&mut self, view: &StepView<'_>) -> Result<ActionId, PolicyError> {
        let agent = self.agent.as_mut().ok_or_else(|| PolicyError::Protocol {
            step: view.state.step_index,
            message: "act before begin_episode".into(),
        })?;
        let mut rng = memory_rng(self.seed, view.state.step_index);
        agent.observe(visible_cells(view.task, view.state), &mut rng);
        Ok(agent.act(view.state.cell, view.state.heading, view.command()))
    }
}
