//! Evaluation protocols: per-position curves, interactive reward curves and
//! world-model forecasting error.

mod curves;
mod interactive;
mod stats;
mod svg;
mod wm;

use thiserror::Error;

pub use curves::{aggregate_positions, Bucketing, Metric, PositionCurve};
pub use interactive::{
    episode_seed, eval_tasks, run_episode, run_interactive, EpisodeTrace, InteractiveEvalConfig, SizeCurve,
};
pub use stats::{ci_95, mean, population_sd, Z95};
pub use svg::curves_svg;
pub use wm::{
    frame_mse, run_wm_eval, write_wm_csv, OraclePredictor, Predictor, PredictRequest, RepeatLastPredictor,
    WMEvalConfig, WMRow,
};

use crate::agent::PolicyError;
use crate::maze::MazeError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid evaluation config: {0}")]
    Config(String),
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("no data to aggregate")]
    Empty,
    #[error(transparent)]
    Maze(#[from] MazeError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("size {size} task {task}")]
    AtTask {
        size: usize,
        task: usize,
        #[source]
        source: Box<EvalError>,
    },
    #[error("predictor error at t={t}: {message}")]
    Predictor { t: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl EvalError {
    pub(crate) fn at_task(self, size: usize, task: usize) -> EvalError {
        EvalError::AtTask { size, task, source: Box::new(self) }
    }

    /// Whether the root cause is a policy/predictor protocol violation.
    pub fn is_protocol(&self) -> bool {
        match self {
            EvalError::Policy(_) | EvalError::Predictor { .. } => true,
            EvalError::AtTask { source, .. } => source.is_protocol(),
            _ => false,
        }
    }
}

/// Writes `interactive.csv` rows (size, step, mean_reward, ci_lo, ci_hi).
pub fn write_interactive_csv<W: std::io::Write>(curves: &[SizeCurve], out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["size", "step", "mean_reward", "ci_lo", "ci_hi"])?;
    for sc in curves {
        let c = &sc.curve;
        for i in 0..c.len() {
            w.write_record([
                sc.size.to_string(),
                c.positions[i].to_string(),
                c.mean[i].to_string(),
                c.ci_lo[i].to_string(),
                c.ci_hi[i].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
