//! Subcommand bodies. Each job is a fully resolved config: the CLI builds
//! one from flags and config files, `rerun` rebuilds it from a manifest, and
//! both paths execute the same code.

pub mod bench;
pub mod curves;
pub mod interactive;
pub mod metalang;
pub mod show;
pub mod task;
pub mod wm;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use schemars::JsonSchema;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::config::{self, Layers};
use crate::error::{config_error, io_error};
use crate::manifest::{self, RunManifest, TOOL};

pub trait Job: Serialize + DeserializeOwned + JsonSchema + Default + Sync {
    /// Subcommand path, e.g. `"maze collect"`.
    const COMMAND: &'static str;

    fn validate(&self) -> anyhow::Result<()>;
    fn seeds(&self) -> BTreeMap<String, u64>;
    fn threads(&self) -> usize {
        0
    }
    /// Files read by the job; hashed into the manifest.
    fn inputs(&self) -> Vec<PathBuf> {
        Vec::new()
    }
    /// Runs the job. `out` is `None` only for report-style jobs.
    fn execute(&self, out: Option<&Path>) -> anyhow::Result<()>;

    /// Fills values that depend on other user-supplied fields.
    fn complete(user: &mut Value) -> anyhow::Result<()> {
        let _ = user;
        Ok(())
    }
}

/// Schema file name for a command: `"maze collect"` → `maze-collect.schema.json`.
pub fn schema_file(command: &str) -> String {
    format!("{}.schema.json", command.replace(' ', "-"))
}

pub fn resolve<J: Job>(layers: &Layers) -> anyhow::Result<J> {
    let mut user = layers.user_doc()?;
    J::complete(&mut user)?;
    config::finish(&J::default(), user)
}

/// Validate, execute and, when there is an output directory, record a
/// manifest next to the outputs.
pub fn run<J: Job>(job: &J, out: Option<&Path>) -> anyhow::Result<()> {
    job.validate()?;
    let mut inputs = BTreeMap::new();
    for path in job.inputs() {
        if !path.exists() {
            return Err(io_error(format!("input {} does not exist", path.display())));
        }
        inputs.insert(path.display().to_string(), manifest::sha256_file(&path)?);
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(job.threads())
        .build()
        .map_err(|e| config_error(e.to_string()))?;
    pool.install(|| job.execute(out))?;
    if let Some(dir) = out {
        let m = RunManifest {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: J::COMMAND.to_string(),
            config: serde_json::to_value(job)?,
            seeds: job.seeds(),
            inputs,
            outputs: manifest::hash_outputs(dir)?,
        };
        m.write(dir)?;
    }
    Ok(())
}

fn rerun_as<J: Job>(m: &RunManifest, out: Option<&Path>) -> anyhow::Result<()> {
    let job: J = config::from_document(m.config.clone())?;
    for path in job.inputs() {
        let key = path.display().to_string();
        let recorded = m.inputs.get(&key).ok_or_else(|| config_error(format!("manifest lacks hash of {key}")))?;
        if path.exists() && &manifest::sha256_file(&path)? != recorded {
            return Err(io_error(format!("input {key} changed since the recorded run")));
        }
    }
    run(&job, out)
}

macro_rules! all_jobs {
    ($m:ident) => {
        $m!(
            metalang::GenJob,
            metalang::CalibrateJob,
            metalang::MapJob,
            task::GenTaskJob,
            show::ShowJob,
            task::CollectJob,
            interactive::EvalJob,
            wm::WmEvalJob,
            bench::BenchJob,
            curves::CurvesJob
        )
    };
}

/// Reruns the job recorded in a manifest.
pub fn rerun(m: &RunManifest, out: Option<&Path>) -> anyhow::Result<()> {
    macro_rules! dispatch {
        ($($j:ty),*) => {
            $(if m.command == <$j>::COMMAND { return rerun_as::<$j>(m, out); })*
        };
    }
    if m.tool != TOOL {
        return Err(config_error(format!("manifest was written by {:?}, not {TOOL}", m.tool)));
    }
    all_jobs!(dispatch);
    Err(config_error(format!("manifest names unknown command {:?}", m.command)))
}

/// `(file name, schema)` for every job config.
pub fn schemas() -> Vec<(String, Value)> {
    macro_rules! collect {
        ($($j:ty),*) => {
            vec![$((schema_file(<$j>::COMMAND), config::schema_of::<$j>())),*]
        };
    }
    all_jobs!(collect)
}

/// `(command, default config)` for every job.
#[cfg(test)]
pub fn defaults() -> Vec<(String, Value)> {
    macro_rules! collect {
        ($($j:ty),*) => {
            vec![$((<$j>::COMMAND.to_string(), serde_json::to_value(<$j>::default()).expect("serializes"))),*]
        };
    }
    all_jobs!(collect)
}

/// Sets `<section>.reach_reward` to the shipped default for `<section>.size`
/// when the user changed the size without choosing a reward.
pub fn complete_reach_reward(user: &mut Value, section: &str) -> anyhow::Result<()> {
    let size = config::get_path(user, &format!("{section}.size")).cloned();
    let has_reward = config::get_path(user, &format!("{section}.reach_reward")).is_some();
    if let (Some(size), false) = (size, has_reward) {
        let size = size.as_u64().ok_or_else(|| config_error(format!("{section}.size must be an integer")))?;
        let reward = icbench_core::maze::default_reach_reward(size as usize).ok_or_else(|| {
            config_error(format!("no default reach_reward for size {size}; set {section}.reach_reward"))
        })?;
        config::set_path(user, &format!("{section}.reach_reward"), reward.into())?;
    }
    Ok(())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn require_out(out: Option<&Path>) -> anyhow::Result<&Path> {
    out.ok_or_else(|| config_error("this command needs an output directory"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn deref<'a>(root: &'a Value, node: &'a Value) -> &'a Value {
        match node.get("$ref").and_then(Value::as_str) {
            Some(r) => {
                let name = r.strip_prefix("#/$defs/").expect("local refs only");
                deref(root, &root["$defs"][name])
            }
            None => node,
        }
    }

    /// Dotted paths of every object key in `doc` that the schema describes
    /// as an object property.
    fn compare(root: &Value, schema: &Value, doc: &Value, path: &str) {
        let schema = deref(root, schema);
        let (Some(props), Value::Object(fields)) = (schema.get("properties"), doc) else { return };
        let declared: BTreeSet<&String> = props.as_object().unwrap().keys().collect();
        let present: BTreeSet<&String> = fields.keys().collect();
        assert_eq!(declared, present, "keys differ at {path:?}");
        for (k, v) in fields {
            compare(root, &props[k], v, &format!("{path}.{k}"));
        }
    }

    #[test]
    fn schemas_describe_exactly_the_default_configs() {
        let schemas: BTreeMap<String, Value> = schemas().into_iter().collect();
        let defaults = defaults();
        assert_eq!(schemas.len(), defaults.len());
        for (command, doc) in defaults {
            let schema = &schemas[&schema_file(&command)];
            config::validate_against(schema, &doc).unwrap_or_else(|e| panic!("{command}: {e:#}"));
            compare(schema, schema, &doc, &command);
            assert_eq!(schema["additionalProperties"], Value::Bool(false), "{command} accepts unknown keys");
        }
    }

    #[test]
    fn unknown_keys_and_wrong_types_are_config_errors() {
        use crate::error::{classify, ExitClass};
        let mut layers = Layers::default();
        layers.flag("maze.sise", 15);
        let e = resolve::<task::GenTaskJob>(&layers).unwrap_err();
        assert_eq!(classify(&e), ExitClass::Config, "{e:#}");
        let mut layers = Layers::default();
        layers.flag("episodes", "many");
        let e = resolve::<task::CollectJob>(&layers).unwrap_err();
        assert_eq!(classify(&e), ExitClass::Config, "{e:#}");
    }

    #[test]
    fn size_flag_picks_the_standard_reward_unless_given() {
        let mut layers = Layers::default();
        layers.flag("maze.size", 25);
        let job: task::GenTaskJob = resolve(&layers).unwrap();
        assert_eq!(job.maze.reach_reward, 1.24);
        layers.flag("maze.reach_reward", 9.0);
        let job: task::GenTaskJob = resolve(&layers).unwrap();
        assert_eq!(job.maze.reach_reward, 9.0);
    }
}
