use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Duration;

use icbench_core::eval::{
    curves_svg, episode_seed, run_interactive, write_interactive_csv, InteractiveEvalConfig, SizeCurve,
};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::{require_out, write_file, Job};
use crate::error::config_error;
use crate::manifest::sha256_bytes;
use crate::policy::{obs_kind, PolicySpec};

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct EvalJob {
    pub eval: InteractiveEvalConfig,
    /// `random`, `privileged:P`, `wire:HOST:PORT` or `exec:COMMAND`.
    pub policy: String,
    /// Observation sent to external policies: `frame` or `topdown`.
    pub obs: String,
    /// Per-message timeout for external policies, seconds.
    pub timeout_secs: f64,
    pub seed: u64,
    /// Also write `interactive.svg`.
    pub svg: bool,
}

impl Default for EvalJob {
    fn default() -> Self {
        EvalJob {
            eval: InteractiveEvalConfig::default(),
            policy: "random".into(),
            obs: "frame".into(),
            timeout_secs: 30.0,
            seed: 0,
            svg: false,
        }
    }
}

pub fn timeout(secs: f64) -> anyhow::Result<Duration> {
    Duration::try_from_secs_f64(secs)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| config_error(format!("timeout {secs} must be a positive number of seconds")))
}

/// SHA-256 of the task manifests; equal across policies under one seed.
pub fn tasks_hash(curve: &SizeCurve) -> String {
    sha256_bytes(&serde_json::to_vec(&curve.manifests).expect("manifests serialize"))
}

#[derive(Serialize)]
struct SizeSummary {
    size: usize,
    mean_final_reward: f64,
    ci_lo: f64,
    ci_hi: f64,
    tasks_sha256: String,
}

impl Job for EvalJob {
    const COMMAND: &'static str = "maze eval";

    fn validate(&self) -> anyhow::Result<()> {
        self.eval.validate()?;
        PolicySpec::parse(&self.policy)?;
        obs_kind(&self.obs)?;
        timeout(self.timeout_secs)?;
        Ok(())
    }

    fn seeds(&self) -> BTreeMap<String, u64> {
        BTreeMap::from([("evaluation".into(), self.seed)])
    }

    fn threads(&self) -> usize {
        self.eval.jobs
    }

    fn execute(&self, out: Option<&Path>) -> anyhow::Result<()> {
        let dir = require_out(out)?;
        let spec = PolicySpec::parse(&self.policy)?;
        let (t, obs) = (timeout(self.timeout_secs)?, obs_kind(&self.obs)?);
        let curves = run_interactive(|| Ok(spec.build(t, obs)), &self.eval, self.seed)?;

        write_interactive_csv(&curves, BufWriter::new(File::create(dir.join("interactive.csv"))?))?;

        let mut w = csv::Writer::from_path(dir.join("episodes.csv"))?;
        w.write_record(["size", "task", "task_seed", "episode_seed", "final_reward", "actions"])?;
        for c in &curves {
            for (i, m) in c.manifests.iter().enumerate() {
                let actions: String = c.actions[i].iter().map(|a| char::from(b'0' + a)).collect();
                w.write_record([
                    c.size.to_string(),
                    i.to_string(),
                    m.seed.to_string(),
                    episode_seed(self.seed, c.size, i).to_string(),
                    c.final_rewards[i].to_string(),
                    actions,
                ])?;
            }
        }
        w.flush()?;

        let summary: Vec<SizeSummary> = curves
            .iter()
            .map(|c| {
                let (lo, hi) = c.final_ci();
                SizeSummary {
                    size: c.size,
                    mean_final_reward: c.final_mean(),
                    ci_lo: lo,
                    ci_hi: hi,
                    tasks_sha256: tasks_hash(c),
                }
            })
            .collect();
        for s in &summary {
            eprintln!(
                "{} size {}: final reward {:.3} [{:.3}, {:.3}]",
                self.policy, s.size, s.mean_final_reward, s.ci_lo, s.ci_hi
            );
        }
        let doc = serde_json::json!({ "policy": self.policy, "sizes": summary });
        write_file(&dir.join("summary.json"), &serde_json::to_vec_pretty(&doc)?)?;

        if self.svg {
            let labels: Vec<(String, &_)> = curves.iter().map(|c| (format!("{}×{}", c.size, c.size), &c.curve)).collect();
            let svg = curves_svg(&labels, &format!("accumulated reward, {}", self.policy), false);
            write_file(&dir.join("interactive.svg"), svg.as_bytes())?;
        }
        Ok(())
    }
}
