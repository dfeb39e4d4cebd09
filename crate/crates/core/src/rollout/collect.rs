use rand::Rng;

use super::{RolloutConfig, RolloutError};
use crate::agent::{memory_rng, random_action, PrivilegedAgent};
use crate::maze::{step, ActionId, MazeTask, SimState, TaskManifest};
use crate::render::{render_fp_into, visible_cells, FrameRGB, FRAME_BYTES};
use crate::rng::{self, derive_seed, streams, tags};

/// Memory-transfer probability of the labelling agent.
pub const REFERENCE_P: f64 = 1.0;

/// One collected episode. Index `t` of every per-step array refers to the
/// state before the t-th transition: the frame seen, the action executed,
/// the label, the reward of the transition and the command shown.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub manifest: TaskManifest,
    pub seed: u64,
    pub behavior_p: f64,
    pub epsilon: f64,
    /// `len() × FRAME_BYTES` raw RGB8 bytes.
    pub frames: Vec<u8>,
    pub behavior_actions: Vec<u8>,
    pub reference_actions: Vec<u8>,
    pub rewards: Vec<f32>,
    pub commands: Vec<u8>,
}

impl EpisodeRecord {
    pub fn len(&self) -> usize {
        self.behavior_actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.behavior_actions.is_empty()
    }

    pub fn frame(&self, t: usize) -> &[u8] {
        &self.frames[t * FRAME_BYTES..(t + 1) * FRAME_BYTES]
    }
}

fn uniform(rng: &mut impl Rng, [lo, hi]: [f64; 2]) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// The episode-level noise draws `(behavior_p, epsilon)` for `seed`.
pub fn draw_episode_params(cfg: &RolloutConfig, seed: u64) -> (f64, f64) {
    let mut rng = rng::stream(seed, streams::ROLLOUT_DRAWS);
    let p = uniform(&mut rng, cfg.behavior_p_range);
    let e = uniform(&mut rng, cfg.epsilon_range);
    (p, e)
}

/// Runs the behavior and reference agents in lockstep over the states the
/// behavior actions produce.
pub fn collect_episode(task: &MazeTask, cfg: &RolloutConfig, seed: u64) -> Result<EpisodeRecord, RolloutError> {
    cfg.validate()?;
    if task.config.episode_len < cfg.episode_len {
        return Err(RolloutError::Config(format!(
            "task episode_len {} is shorter than the rollout's {}",
            task.config.episode_len, cfg.episode_len
        )));
    }
    let len = cfg.episode_len;
    let (behavior_p, epsilon) = draw_episode_params(cfg, seed);
    // per-step coin flips and random actions
    let mut noise = rng::stream(derive_seed(seed, tags::BEHAVIOR, 1), streams::ROLLOUT_DRAWS);
    let behavior_seed = derive_seed(seed, tags::BEHAVIOR, 0);
    let reference_seed = derive_seed(seed, tags::REFERENCE, 0);

    let mut behavior = PrivilegedAgent::new(task.size(), behavior_p);
    let mut reference = PrivilegedAgent::new(task.size(), REFERENCE_P);
    let mut rec = EpisodeRecord {
        manifest: task.manifest(),
        seed,
        behavior_p,
        epsilon,
        frames: vec![0; len * FRAME_BYTES],
        behavior_actions: Vec::with_capacity(len),
        reference_actions: Vec::with_capacity(len),
        rewards: Vec::with_capacity(len),
        commands: Vec::with_capacity(len),
    };
    let mut frame = FrameRGB::blank();
    let mut state = SimState::initial(task);
    for t in 0..len {
        render_fp_into(task, &state, &mut frame);
        rec.frames[t * FRAME_BYTES..(t + 1) * FRAME_BYTES].copy_from_slice(&frame.pixels);
        let command = state.command(task);

        let visible = visible_cells(task, &state);
        behavior.observe(visible.clone(), &mut memory_rng(behavior_seed, t));
        reference.observe(visible, &mut memory_rng(reference_seed, t));
        let label = reference.act(state.cell, state.heading, command);
        let planned = behavior.act(state.cell, state.heading, command);
        let action = if noise.random::<f64>() < epsilon { random_action(&mut noise) } else { planned };

        let out = step(task, &state, action)?;
        rec.behavior_actions.push(action.as_u8());
        rec.reference_actions.push(label.as_u8());
        rec.rewards.push(out.reward as f32);
        rec.commands.push(command);
        state = out.state;
    }
    Ok(rec)
}

/// Re-simulates `actions` from the manifest and returns the frames seen.
pub fn replay_frames(manifest: &TaskManifest, actions: &[u8]) -> Result<Vec<u8>, RolloutError> {
    let task = manifest.generate()?;
    let mut frames = vec![0; actions.len() * FRAME_BYTES];
    let mut frame = FrameRGB::blank();
    let mut state = SimState::initial(&task);
    for (t, &a) in actions.iter().enumerate() {
        render_fp_into(&task, &state, &mut frame);
        frames[t * FRAME_BYTES..(t + 1) * FRAME_BYTES].copy_from_slice(&frame.pixels);
        let action = ActionId::try_from(a)?;
        state = step(&task, &state, action)?.state;
    }
    Ok(frames)
}

/// Checks that the behavior actions regenerate the stored frames.
pub fn verify_replay(rec: &EpisodeRecord) -> Result<(), RolloutError> {
    let frames = replay_frames(&rec.manifest, &rec.behavior_actions)?;
    match frames.chunks(FRAME_BYTES).zip(rec.frames.chunks(FRAME_BYTES)).position(|(a, b)| a != b) {
        Some(step) => Err(RolloutError::ReplayMismatch { step }),
        None if frames.len() != rec.frames.len() => Err(RolloutError::ReplayMismatch { step: rec.len() }),
        None => Ok(()),
    }
}
