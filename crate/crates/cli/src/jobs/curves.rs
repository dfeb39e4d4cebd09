use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;
use icbench_core::eval::{aggregate_positions, curves_svg, Bucketing, Metric};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::{require_out, write_file, Job};
use crate::error::config_error;

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct CurvesJob {
    /// Per-position logs: CSV files with columns `sequence,position,value`.
    pub inputs: Vec<String>,
    pub metric: Metric,
    /// Group positions into log-spaced buckets growing by this ratio.
    pub bucket_ratio: Option<f64>,
    pub svg: bool,
}

impl Default for CurvesJob {
    fn default() -> Self {
        CurvesJob { inputs: Vec::new(), metric: Metric::Nats, bucket_ratio: None, svg: false }
    }
}

/// Rows keyed by `(input index, sequence id)`, in file order within a row.
pub fn read_logs(paths: &[String]) -> anyhow::Result<Vec<Vec<(usize, f64)>>> {
    let mut rows: BTreeMap<(usize, String), Vec<(usize, f64)>> = BTreeMap::new();
    for (i, path) in paths.iter().enumerate() {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {path}"))?;
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["sequence", "position", "value"] {
            return Err(config_error(format!("{path}: expected header sequence,position,value")));
        }
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = || config_error(format!("{path}: malformed record {}", line + 2));
            let position: usize = rec[1].parse().map_err(|_| bad())?;
            let value: f64 = rec[2].parse().map_err(|_| bad())?;
            rows.entry((i, rec[0].to_string())).or_default().push((position, value));
        }
    }
    Ok(rows.into_values().collect())
}

impl Job for CurvesJob {
    const COMMAND: &'static str = "eval curves";

    fn validate(&self) -> anyhow::Result<()> {
        if self.inputs.is_empty() {
            return Err(config_error("no input logs given"));
        }
        if let Some(r) = self.bucket_ratio {
            if !(r > 1.0) {
                return Err(config_error("bucket_ratio must exceed 1"));
            }
        }
        Ok(())
    }

    fn seeds(&self) -> BTreeMap<String, u64> {
        BTreeMap::new()
    }

    fn inputs(&self) -> Vec<PathBuf> {
        self.inputs.iter().map(PathBuf::from).collect()
    }

    fn execute(&self, out: Option<&Path>) -> anyhow::Result<()> {
        let dir = require_out(out)?;
        let rows = read_logs(&self.inputs)?;
        let bucketing = self.bucket_ratio.map_or(Bucketing::None, Bucketing::log);
        let curve = aggregate_positions(&rows, self.metric, bucketing)?;
        curve.write_csv(BufWriter::new(File::create(dir.join("positions.csv"))?))?;
        if self.svg {
            let svg = curves_svg(&[(self.metric.label().to_string(), &curve)], "per-position curve", true);
            write_file(&dir.join("positions.svg"), svg.as_bytes())?;
        }
        Ok(())
    }
}
