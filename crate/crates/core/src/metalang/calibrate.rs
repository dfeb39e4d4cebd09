use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sample_task, LangConfig, MetalangError};
use crate::rng::{derive_seed, tags};

/// Monte-Carlo estimate of the generator's mean ground-truth cross-entropy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DifficultyEstimate {
    pub theta_sigma: f64,
    /// Mean −log p(x_t) in nats over all tasks and positions.
    pub mean_nll: f64,
    /// 95% half-width over per-task means.
    pub ci_half_width: f64,
    pub tasks: usize,
    pub tokens_per_task: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub theta_sigma: f64,
    pub estimate: DifficultyEstimate,
    pub band: (f64, f64),
    /// Every (theta_sigma, mean_nll) evaluated during the search.
    pub trace: Vec<(f64, f64)>,
}

/// Samples `tasks` languages and `tokens` positions from each.
///
/// Task and sequence seeds depend only on `seed` and the task index, and θ is
/// drawn as σ times a fixed standard-normal stream, so estimates at different
/// σ share common random numbers.
pub fn estimate_difficulty(
    config: &LangConfig,
    tasks: usize,
    tokens: usize,
    seed: u64,
) -> Result<DifficultyEstimate, MetalangError> {
    config.validate()?;
    if tasks < 2 || tokens == 0 {
        return Err(MetalangError::Config("need at least 2 tasks and 1 token".into()));
    }
    let per_task: Vec<f64> = (0..tasks as u64)
        .into_par_iter()
        .map(|i| {
            let task = sample_task(config, derive_seed(seed, tags::LANG_TASK, i))?;
            let (_, nll) = task.generate_scored_len(derive_seed(seed, tags::LANG_SEQUENCE, i), tokens);
            Ok(nll.iter().sum::<f64>() / tokens as f64)
        })
        .collect::<Result<_, MetalangError>>()?;
    let n = per_task.len() as f64;
    let mean = per_task.iter().sum::<f64>() / n;
    let sd = (per_task.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    Ok(DifficultyEstimate {
        theta_sigma: config.theta_sigma,
        mean_nll: mean,
        ci_half_width: 1.96 * sd / n.sqrt(),
        tasks,
        tokens_per_task: tokens,
    })
}

/// Searches theta_sigma so the mean ground-truth cross-entropy lands in `band`.
///
/// Starts from `base.theta_sigma`; if that misses, scans a log grid over
/// [1e-2, 1e2], then bisects (in log σ) the first bracket around the band
/// centre.
pub fn calibrate_sigma(
    base: &LangConfig,
    band: (f64, f64),
    tasks: usize,
    tokens: usize,
    seed: u64,
) -> Result<CalibrationReport, MetalangError> {
    let (lo, hi) = band;
    let centre = 0.5 * (lo + hi);
    let mut trace = Vec::new();
    let mut eval = |sigma: f64| -> Result<DifficultyEstimate, MetalangError> {
        let cfg = LangConfig { theta_sigma: sigma, ..base.clone() };
        let est = estimate_difficulty(&cfg, tasks, tokens, seed)?;
        trace.push((sigma, est.mean_nll));
        Ok(est)
    };
    let in_band = |e: &DifficultyEstimate| e.mean_nll >= lo && e.mean_nll <= hi;

    let first = eval(base.theta_sigma)?;
    if in_band(&first) {
        return Ok(CalibrationReport { theta_sigma: base.theta_sigma, estimate: first, band, trace });
    }

    let grid: Vec<f64> = (-4..=4).map(|k| 10f64.powf(k as f64 * 0.5)).collect();
    let mut evaluated = Vec::with_capacity(grid.len());
    for &sigma in &grid {
        let est = eval(sigma)?;
        if in_band(&est) {
            return Ok(CalibrationReport { theta_sigma: sigma, estimate: est, band, trace });
        }
        evaluated.push(est);
    }

    let bracket = evaluated
        .windows(2)
        .find(|w| (w[0].mean_nll - centre).signum() != (w[1].mean_nll - centre).signum());
    if let Some(w) = bracket {
        let (mut a, mut b) = (w[0].clone(), w[1].clone());
        for _ in 0..30 {
            let mid = (a.theta_sigma.ln() + b.theta_sigma.ln()).mul_add(0.5, 0.0).exp();
            let est = eval(mid)?;
            if in_band(&est) {
                return Ok(CalibrationReport { theta_sigma: mid, estimate: est, band, trace });
            }
            if (est.mean_nll - centre).signum() == (a.mean_nll - centre).signum() {
                a = est;
            } else {
                b = est;
            }
        }
    }

    let best = evaluated
        .iter()
        .chain(std::iter::once(&first))
        .min_by(|x, y| (x.mean_nll - centre).abs().total_cmp(&(y.mean_nll - centre).abs()))
        .expect("at least one evaluation");
    Err(MetalangError::Calibration { sigma: best.theta_sigma, mean_nll: best.mean_nll, lo, hi })
}
