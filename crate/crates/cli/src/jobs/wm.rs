use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use icbench_core::eval::{curves_svg, run_wm_eval, write_wm_csv, Metric, PositionCurve, WMEvalConfig, WMRow};
use icbench_core::wire::ObsKind;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::interactive::timeout;
use super::{require_out, write_file, Job};
use crate::error::config_error;
use crate::policy::{PolicySpec, PredictorSpec};

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct WmEvalJob {
    pub wm: WMEvalConfig,
    /// `oracle`, `repeat-last`, `wire:HOST:PORT` or `exec:COMMAND`.
    pub predictor: String,
    /// In-process policy that drives the environment: `random` or `privileged:P`.
    pub driver: String,
    pub timeout_secs: f64,
    pub seed: u64,
    pub svg: bool,
}

impl Default for WmEvalJob {
    fn default() -> Self {
        WmEvalJob {
            wm: WMEvalConfig::default(),
            predictor: "oracle".into(),
            driver: "privileged:1.0".into(),
            timeout_secs: 30.0,
            seed: 0,
            svg: false,
        }
    }
}

/// One curve per (size, k) with the checkpoints on the x axis.
fn curves(rows: &[WMRow], num_tasks: usize) -> Vec<(String, PositionCurve)> {
    let mut groups: BTreeMap<(usize, usize), Vec<&WMRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.size, r.k)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((size, k), rs)| {
            let curve = PositionCurve {
                metric: Metric::Mse,
                positions: rs.iter().map(|r| r.t).collect(),
                mean: rs.iter().map(|r| r.mse).collect(),
                count: vec![num_tasks; rs.len()],
                ci_lo: rs.iter().map(|r| r.ci_lo).collect(),
                ci_hi: rs.iter().map(|r| r.ci_hi).collect(),
            };
            (format!("{size}×{size}, k={k}"), curve)
        })
        .collect()
}

impl Job for WmEvalJob {
    const COMMAND: &'static str = "maze wm-eval";

    fn validate(&self) -> anyhow::Result<()> {
        self.wm.validate()?;
        PredictorSpec::parse(&self.predictor)?;
        if let PolicySpec::Wire(_) = PolicySpec::parse(&self.driver)? {
            return Err(config_error("the driver must be an in-process policy (random or privileged:P)"));
        }
        timeout(self.timeout_secs)?;
        Ok(())
    }

    fn seeds(&self) -> BTreeMap<String, u64> {
        BTreeMap::from([("evaluation".into(), self.seed)])
    }

    fn threads(&self) -> usize {
        self.wm.jobs
    }

    fn execute(&self, out: Option<&Path>) -> anyhow::Result<()> {
        let dir = require_out(out)?;
        let predictor = PredictorSpec::parse(&self.predictor)?;
        let driver = PolicySpec::parse(&self.driver)?;
        let t = timeout(self.timeout_secs)?;
        let rows = run_wm_eval(
            || Ok(driver.build(t, ObsKind::Frame)),
            || predictor.build(t, &self.wm),
            &self.wm,
            self.seed,
        )?;
        write_wm_csv(&rows, BufWriter::new(File::create(dir.join("wm.csv"))?))?;
        for r in &rows {
            eprintln!("size {} t={} k={}: mse {:.6} [{:.6}, {:.6}]", r.size, r.t, r.k, r.mse, r.ci_lo, r.ci_hi);
        }
        if self.svg {
            let cs = curves(&rows, self.wm.num_tasks);
            let labels: Vec<(String, &PositionCurve)> = cs.iter().map(|(l, c)| (l.clone(), c)).collect();
            let svg = curves_svg(&labels, &format!("forecast error, {}", self.predictor), true);
            write_file(&dir.join("wm.svg"), svg.as_bytes())?;
        }
        Ok(())
    }
}
