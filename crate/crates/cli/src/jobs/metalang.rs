use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use icbench_core::metalang::{
    calibrate_sigma, write_dataset, write_sequences, CorpusMap, DatasetSpec, LangConfig, DATASET_FILE, PUNCTUATION,
};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::{require_out, write_file, Job};
use crate::error::config_error;

#[derive(Debug, Clone, Default, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct GenJob {
    pub dataset: DatasetSpec,
    /// Worker threads (0 = all cores). Output does not depend on it.
    pub jobs: usize,
}

impl Job for GenJob {
    const COMMAND: &'static str = "metalang gen";

    fn validate(&self) -> anyhow::Result<()> {
        Ok(self.dataset.validate()?)
    }

    fn seeds(&self) -> BTreeMap<String, u64> {
        BTreeMap::from([("master".into(), self.dataset.master_seed)])
    }

    fn threads(&self) -> usize {
        self.jobs
    }

    fn execute(&self, out: Option<&Path>) -> anyhow::Result<()> {
        let summary = write_dataset(&self.dataset, require_out(out)?)?;
        log::info!("wrote {} sequences to {}", summary.sequences, summary.dataset_path.display());
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateJob {
    /// Generator settings; `theta_sigma` is the starting point of the search.
    pub lang: LangConfig,
    /// Target band for the mean ground-truth cross-entropy, nats.
    pub band: [f64; 2],
    pub tasks: usize,
    pub tokens: usize,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for CalibrateJob {
    fn default() -> Self {
        CalibrateJob { lang: LangConfig::default(), band: [0.5, 1.0], tasks: 200, tokens: 512, seed: 0, jobs: 0 }
    }
}

impl Job for CalibrateJob {
    const COMMAND: &'static str = "metalang calibrate";

    fn validate(&self) -> anyhow::Result<()> {
        self.lang.validate()?;
        let [lo, hi] = self.band;
        if !(lo < hi) {
            return Err(config_error(format!("band [{lo}, {hi}] is empty")));
        }
        Ok(())
    }

    fn seeds(&self) -> BTreeMap<String, u64> {
        BTreeMap::from([("master".into(), self.seed)])
    }

    fn threads(&self) -> usize {
        self.jobs
    }

    fn execute(&self, out: Option<&Path>) -> anyhow::Result<()> {
        let report = calibrate_sigma(&self.lang, (self.band[0], self.band[1]), self.tasks, self.tokens, self.seed)?;
        eprintln!(
            "theta_sigma {} gives {:.4} ± {:.4} nats over {} tasks × {} tokens",
            report.theta_sigma,
            report.estimate.mean_nll,
            report.estimate.ci_half_width,
            self.tasks,
            self.tokens
        );
        println!("{}", report.theta_sigma);
        if let Some(dir) = out {
            write_file(&dir.join("calibration.json"), &serde_json::to_vec_pretty(&report)?)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct MapJob {
    /// Path of the text corpus.
    pub text: String,
    /// Seed of the random character-to-token bijection.
    pub seed: u64,
    /// Tokens per output sequence.
    pub window: usize,
}

impl Default for MapJob {
    fn default() -> Self {
        MapJob { text: String::new(), seed: 0, window: 4096 }
    }
}

impl Job for MapJob {
    const COMMAND: &'static str = "metalang map";

    fn validate(&self) -> anyhow::Result<()> {
        if self.text.is_empty() {
            return Err(config_error("no input text given"));
        }
        if self.window == 0 {
            return Err(config_error("window must be positive"));
        }
        Ok(())
    }

    fn seeds(&self) -> BTreeMap<String, u64> {
        BTreeMap::from([("mapping".into(), self.seed)])
    }

    fn inputs(&self) -> Vec<PathBuf> {
        vec![PathBuf::from(&self.text)]
    }

    fn execute(&self, out: Option<&Path>) -> anyhow::Result<()> {
        let dir = require_out(out)?;
        let text = std::fs::read(&self.text).with_context(|| format!("reading {}", self.text))?;
        let map = CorpusMap::new(self.seed);
        let seqs = map.map_corpus(&text, self.window);
        write_sequences(&dir.join(DATASET_FILE), 32, &seqs)?;
        let table: BTreeMap<String, u8> = (b'a'..=b'z')
            .chain(PUNCTUATION)
            .map(|c| ((c as char).to_string(), map.token(c).expect("domain character")))
            .collect();
        let mapping = serde_json::json!({ "seed": self.seed, "window": self.window, "sequences": seqs.len(), "table": table });
        write_file(&dir.join("mapping.json"), &serde_json::to_vec_pretty(&mapping)?)?;
        log::info!("mapped {} windows of {} tokens", seqs.len(), self.window);
        Ok(())
    }
}
