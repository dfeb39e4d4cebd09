use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ci_95, mean, EvalError, PositionCurve};
use crate::agent::{Policy, StepView};
use crate::maze::{generate_task, step, MazeConfig, MazeTask, SimState, TaskManifest};
use crate::rng::{derive_seed, tags};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct InteractiveEvalConfig {
    pub num_tasks: usize,
    pub sizes: Vec<usize>,
    pub horizon: usize,
    pub step_cost: f64,
    pub ci_level: f64,
    /// Worker threads; results do not depend on it.
    pub jobs: usize,
}

impl Default for InteractiveEvalConfig {
    fn default() -> Self {
        InteractiveEvalConfig {
            num_tasks: 64,
            sizes: vec![15, 25, 35],
            horizon: 2000,
            step_cost: 0.0,
            ci_level: 0.95,
            jobs: 0,
        }
    }
}

impl InteractiveEvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.num_tasks < 2 {
            return Err(EvalError::Config("num_tasks must be at least 2".into()));
        }
        if self.sizes.is_empty() || self.horizon == 0 {
            return Err(EvalError::Config("need at least one size and a positive horizon".into()));
        }
        if (self.ci_level - 0.95).abs() > 1e-12 {
            return Err(EvalError::Config("only 95% intervals are supported".into()));
        }
        Ok(())
    }
}

/// Accumulated-reward curve for one maze size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeCurve {
    pub size: usize,
    pub curve: PositionCurve,
    /// Final accumulated reward per task, in task order.
    pub final_rewards: Vec<f64>,
    pub manifests: Vec<TaskManifest>,
    /// Executed action ids per task.
    pub actions: Vec<Vec<u8>>,
}

impl SizeCurve {
    pub fn final_mean(&self) -> f64 {
        mean(&self.final_rewards)
    }

    pub fn final_ci(&self) -> (f64, f64) {
        ci_95(&self.final_rewards).expect("num_tasks >= 2")
    }
}

/// Evaluation tasks for one size; shared by every policy under `seed`.
pub fn eval_tasks(size: usize, cfg: &InteractiveEvalConfig, seed: u64) -> Result<Vec<TaskManifest>, EvalError> {
    let config = MazeConfig { step_cost: cfg.step_cost, episode_len: cfg.horizon, ..MazeConfig::for_size(size)? };
    Ok((0..cfg.num_tasks as u64)
        .map(|i| TaskManifest {
            config: config.clone(),
            seed: derive_seed(seed, tags::MAZE_TASK ^ size as u64, i),
        })
        .collect())
}

/// Episode seed handed to the policy for task `index`.
pub fn episode_seed(seed: u64, size: usize, index: usize) -> u64 {
    derive_seed(seed, tags::EPISODE ^ size as u64, index as u64)
}

/// Per-step record of one evaluation episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    /// Accumulated reward after every step.
    pub accumulated: Vec<f64>,
    pub actions: Vec<u8>,
}

/// Runs `policy` on `task` for the task's episode length.
pub fn run_episode(task: &MazeTask, policy: &mut dyn Policy, seed: u64) -> Result<EpisodeTrace, EvalError> {
    policy.begin_episode(task, seed)?;
    let mut state = SimState::initial(task);
    let mut last_reward = 0.0;
    let mut trace = EpisodeTrace {
        accumulated: Vec::with_capacity(task.config.episode_len),
        actions: Vec::with_capacity(task.config.episode_len),
    };
    while !state.done {
        let action = policy.act(&StepView { task, state: &state, last_reward })?;
        let out = step(task, &state, action)?;
        last_reward = out.reward;
        state = out.state;
        trace.accumulated.push(state.accumulated_reward);
        trace.actions.push(action.as_u8());
    }
    policy.end_episode(&state)?;
    Ok(trace)
}

/// Runs a fresh policy from `make_policy` on every evaluation task of every
/// size.
pub fn run_interactive<F>(make_policy: F, cfg: &InteractiveEvalConfig, seed: u64) -> Result<Vec<SizeCurve>, EvalError>
where
    F: Fn() -> Result<Box<dyn Policy>, EvalError> + Sync,
{
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| EvalError::Config(e.to_string()))?;
    cfg.sizes
        .iter()
        .map(|&size| {
            let manifests = eval_tasks(size, cfg, seed)?;
            let traces: Vec<EpisodeTrace> = pool.install(|| {
                manifests
                    .par_iter()
                    .enumerate()
                    .map(|(i, m)| {
                        let task = generate_task(&m.config, m.seed)?;
                        let mut policy = make_policy()?;
                        run_episode(&task, policy.as_mut(), episode_seed(seed, size, i))
                            .map_err(|e| e.at_task(size, i))
                    })
                    .collect::<Result<_, EvalError>>()
            })?;
            let rows: Vec<Vec<f64>> = traces.iter().map(|t| t.accumulated.clone()).collect();
            let curve = PositionCurve::from_rows(&rows, super::Metric::Reward, 1)?;
            let final_rewards = rows.iter().map(|r| *r.last().expect("horizon > 0")).collect();
            let actions = traces.into_iter().map(|t| t.actions).collect();
            Ok(SizeCurve { size, curve, final_rewards, manifests, actions })
        })
        .collect()
}
