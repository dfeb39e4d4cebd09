use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ci_95, mean, EvalError};
use crate::agent::{Policy, StepView};
use crate::maze::{generate_task, step, ActionId, MazeConfig, MazeTask, SimState};
use crate::render::{render_fp, FrameRGB};
use crate::rng::{derive_seed, tags};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct WMEvalConfig {
    /// Context lengths t: number of frames observed before predicting.
    pub checkpoints: Vec<usize>,
    /// Autoregressive rollout depths k.
    pub depths: Vec<usize>,
    pub num_tasks: usize,
    pub sizes: Vec<usize>,
    pub jobs: usize,
}

impl Default for WMEvalConfig {
    fn default() -> Self {
        WMEvalConfig { checkpoints: vec![1, 100, 1000, 2000], depths: vec![1, 4], num_tasks: 64, sizes: vec![15, 25, 35], jobs: 0 }
    }
}

impl WMEvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.checkpoints.is_empty() || self.checkpoints.contains(&0) {
            return Err(EvalError::Config("checkpoints must be non-empty and positive".into()));
        }
        if self.depths.is_empty() || self.depths.contains(&0) {
            return Err(EvalError::Config("depths must be non-empty and positive".into()));
        }
        if self.num_tasks < 2 || self.sizes.is_empty() {
            return Err(EvalError::Config("need num_tasks >= 2 and at least one size".into()));
        }
        Ok(())
    }

    /// Steps each task must be driven for.
    pub fn rollout_len(&self) -> usize {
        self.checkpoints.iter().max().unwrap() + self.depths.iter().max().unwrap() - 1
    }
}

/// One forecasting query: after `t` observed frames and `t − 1` executed
/// actions, predict the next `future_actions.len()` frames.
pub struct PredictRequest<'a> {
    pub t: usize,
    pub executed: &'a [ActionId],
    pub future_actions: &'a [ActionId],
}

/// A world model under evaluation. Calls arrive in episode order:
/// `observe` for every frame, `predict` at checkpoints, `commit` for the
/// action executed after each frame.
pub trait Predictor: Send {
    fn begin_episode(&mut self, task_index: usize) -> Result<(), EvalError>;
    fn observe(&mut self, view: &StepView<'_>) -> Result<(), EvalError>;
    fn predict(&mut self, request: &PredictRequest<'_>) -> Result<Vec<FrameRGB>, EvalError>;
    fn commit(&mut self, action: ActionId) -> Result<(), EvalError>;
    fn end_episode(&mut self, _final_state: &SimState) -> Result<(), EvalError> {
        Ok(())
    }
}

/// Upper-bound predictor: simulates the true dynamics from the last observed
/// state and renders the result.
#[derive(Default)]
pub struct OraclePredictor {
    last: Option<(MazeTask, SimState)>,
}

impl Predictor for OraclePredictor {
    fn begin_episode(&mut self, _task_index: usize) -> Result<(), EvalError> {
        self.last = None;
        Ok(())
    }

    fn observe(&mut self, view: &StepView<'_>) -> Result<(), EvalError> {
        match &mut self.last {
            Some((task, state)) if task.seed == view.task.seed => *state = view.state.clone(),
            _ => self.last = Some((view.task.clone(), view.state.clone())),
        }
        Ok(())
    }

    fn predict(&mut self, request: &PredictRequest<'_>) -> Result<Vec<FrameRGB>, EvalError> {
        let (task, state) = self
            .last
            .as_ref()
            .ok_or_else(|| EvalError::Predictor { t: request.t, message: "predict before observe".into() })?;
        let mut s = state.clone();
        request
            .future_actions
            .iter()
            .map(|&a| {
                s = step(task, &s, a)?.state;
                Ok(render_fp(task, &s))
            })
            .collect()
    }

    fn commit(&mut self, _action: ActionId) -> Result<(), EvalError> {
        Ok(())
    }
}

/// Forecasts that every future frame equals the last observed one.
#[derive(Default)]
pub struct RepeatLastPredictor {
    last: Option<FrameRGB>,
}

impl Predictor for RepeatLastPredictor {
    fn begin_episode(&mut self, _task_index: usize) -> Result<(), EvalError> {
        self.last = None;
        Ok(())
    }

    fn observe(&mut self, view: &StepView<'_>) -> Result<(), EvalError> {
        self.last = Some(view.frame());
        Ok(())
    }

    fn predict(&mut self, request: &PredictRequest<'_>) -> Result<Vec<FrameRGB>, EvalError> {
        let f = self.last.clone().unwrap_or_else(FrameRGB::blank);
        Ok(vec![f; request.future_actions.len()])
    }

    fn commit(&mut self, _action: ActionId) -> Result<(), EvalError> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WMRow {
    pub size: usize,
    pub t: usize,
    pub k: usize,
    /// Mean over tasks of the pixel-mean squared error summed over the k
    /// rollout frames, pixels scaled to [0, 1].
    pub mse: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Mean squared error between two frames with pixels scaled to [0, 1].
pub fn frame_mse(a: &FrameRGB, b: &FrameRGB) -> f64 {
    let ss: u64 = a.pixels.iter().zip(&b.pixels).map(|(&x, &y)| {
        let d = i64::from(x) - i64::from(y);
        (d * d) as u64
    }).sum();
    ss as f64 / (a.pixels.len() as f64 * 255.0 * 255.0)
}

/// Drives one task and returns the cumulative error for each (t, k) pair
/// in checkpoint-major order.
fn eval_task(
    task: &MazeTask,
    cfg: &WMEvalConfig,
    driver: &mut dyn Policy,
    predictor: &mut dyn Predictor,
    seed: u64,
    task_index: usize,
) -> Result<Vec<f64>, EvalError> {
    let len = cfg.rollout_len();

    // Drive first so future actions are known at each checkpoint.
    driver.begin_episode(task, seed)?;
    let mut states = vec![SimState::initial(task)];
    let mut actions = Vec::with_capacity(len);
    let mut rewards = vec![0.0];
    for _ in 0..len {
        let s = states.last().unwrap();
        let a = driver.act(&StepView { task, state: s, last_reward: *rewards.last().unwrap() })?;
        let out = step(task, s, a)?;
        actions.push(a);
        rewards.push(out.reward);
        states.push(out.state);
    }
    driver.end_episode(states.last().unwrap())?;

    let mut errors = vec![0.0; cfg.checkpoints.len() * cfg.depths.len()];
    predictor.begin_episode(task_index)?;
    for s in 0..len {
        predictor.observe(&StepView { task, state: &states[s], last_reward: rewards[s] })?;
        let t = s + 1;
        for (ci, _) in cfg.checkpoints.iter().enumerate().filter(|(_, &c)| c == t) {
            for (di, &k) in cfg.depths.iter().enumerate() {
                let request = PredictRequest { t, executed: &actions[..s], future_actions: &actions[s..s + k] };
                let frames = predictor.predict(&request)?;
                if frames.len() != k {
                    return Err(EvalError::Predictor { t, message: format!("expected {k} frames, got {}", frames.len()) });
                }
                errors[ci * cfg.depths.len() + di] = frames
                    .iter()
                    .enumerate()
                    .map(|(j, f)| frame_mse(f, &render_fp(task, &states[s + 1 + j])))
                    .sum();
            }
        }
        predictor.commit(actions[s])?;
    }
    predictor.end_episode(&states[len])?;
    Ok(errors)
}

/// Forecast-error table over every (size, t, k).
pub fn run_wm_eval<D, P>(make_driver: D, make_predictor: P, cfg: &WMEvalConfig, seed: u64) -> Result<Vec<WMRow>, EvalError>
where
    D: Fn() -> Result<Box<dyn Policy>, EvalError> + Sync,
    P: Fn() -> Result<Box<dyn Predictor>, EvalError> + Sync,
{
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| EvalError::Config(e.to_string()))?;
    let mut rows = Vec::new();
    for &size in &cfg.sizes {
        let config = MazeConfig { episode_len: cfg.rollout_len(), ..MazeConfig::for_size(size)? };
        let per_task: Vec<Vec<f64>> = pool.install(|| {
            (0..cfg.num_tasks)
                .into_par_iter()
                .map(|i| {
                    let task = generate_task(&config, derive_seed(seed, tags::MAZE_TASK ^ size as u64, i as u64))?;
                    let mut driver = make_driver()?;
                    let mut predictor = make_predictor()?;
                    let ep_seed = derive_seed(seed, tags::EPISODE ^ size as u64, i as u64);
                    eval_task(&task, cfg, driver.as_mut(), predictor.as_mut(), ep_seed, i).map_err(|e| e.at_task(size, i))
                })
                .collect::<Result<_, EvalError>>()
        })?;
        for (ci, &t) in cfg.checkpoints.iter().enumerate() {
            for (di, &k) in cfg.depths.iter().enumerate() {
                let samples: Vec<f64> = per_task.iter().map(|e| e[ci * cfg.depths.len() + di]).collect();
                let (lo, hi) = ci_95(&samples)?;
                rows.push(WMRow { size, t, k, mse: mean(&samples), ci_lo: lo, ci_hi: hi });
            }
        }
    }
    Ok(rows)
}

pub fn write_wm_csv<W: Write>(rows: &[WMRow], out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["size", "t", "k", "mse", "ci_lo", "ci_hi"])?;
    for r in rows {
        w.write_record([
            r.size.to_string(),
            r.t.to_string(),
            r.k.to_string(),
            r.mse.to_string(),
            r.ci_lo.to_string(),
            r.ci_hi.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
