//! `icbench`: generate, collect, evaluate and benchmark from the command line.
//!
//! Exit codes: 0 success, 1 usage, 2 invalid config, 3 I/O, 4 protocol.

mod config;
mod error;
mod jobs;
mod manifest;
mod policy;
mod wire_agent;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use icbench_core::metalang::DatasetMode;

use config::Layers;
use error::{classify, config_error, ExitClass};
use jobs::{bench, curves, interactive, metalang, show, task, wm, Job};

#[derive(Debug, Parser)]
#[command(name = "icbench", version, about = "Procedural in-context learning benchmarks: meta-languages and maze navigation")]
struct Cli {
    /// Log more (-v info, -vv debug); logs go to stderr
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Randomized n-gram pseudo-languages
    #[command(subcommand)]
    Metalang(MetalangCmd),
    /// Maze tasks, rollouts and interactive evaluation
    #[command(subcommand)]
    Maze(MazeCmd),
    /// Aggregate evaluation logs
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Run the reference random agent as a wire client
    WireAgent(WireAgentArgs),
    /// Re-execute the run recorded in a manifest
    Rerun(RerunArgs),
    /// Print or write the JSON schemas of all config files
    Schema(SchemaArgs),
}

#[derive(Debug, Subcommand)]
enum MetalangCmd {
    /// Write a dataset of sampled sequences plus its index
    Gen(GenArgs),
    /// Search theta_sigma so the ground-truth cross-entropy lands in a band
    Calibrate(CalibrateArgs),
    /// Map a text corpus onto the 32-token vocabulary
    Map(MapArgs),
}

#[derive(Debug, Subcommand)]
enum MazeCmd {
    /// Generate one task and write its manifest and archive
    GenTask(GenTaskArgs),
    /// Dump first-person frames, top-down crops and the map as PNG
    Show(ShowArgs),
    /// Collect imitation episodes into episode packs
    Collect(CollectArgs),
    /// Accumulated-reward curves of a policy over evaluation tasks
    Eval(MazeEvalArgs),
    /// Forecasting error of a world model at fixed checkpoints
    WmEval(WmEvalArgs),
    /// Measure first-person rendering throughput on one thread
    BenchFps(BenchArgs),
}

#[derive(Debug, Subcommand)]
enum EvalCmd {
    /// Per-position mean and 95% interval from per-sequence logs
    Curves(CurvesArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config file; flags override its fields
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override a config field by dotted path, e.g. maze.size=25 (repeatable, applied last)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl Common {
    fn layers(&self) -> anyhow::Result<Layers> {
        Layers::new(self.config.as_deref(), &self.sets)
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Number of sequences
    #[arg(long)]
    sequences: Option<usize>,
    /// Tokens per sequence
    #[arg(long)]
    seq_len: Option<usize>,
    /// Draw sequences from a fixed pool of K tasks instead of a fresh task each
    #[arg(long, value_name = "K")]
    pool: Option<usize>,
    /// Worker threads (0 = all cores); never changes outputs
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[command(flatten)]
    common: Common,
    /// Context length n of the languages being calibrated
    #[arg(long, value_name = "K")]
    n: Option<usize>,
    /// Languages sampled per estimate
    #[arg(long)]
    tasks: Option<usize>,
    /// Tokens scored per language
    #[arg(long)]
    tokens: Option<usize>,
    /// Seed
    #[arg(long)]
    seed: Option<u64>,
    /// Also write calibration.json and a manifest here
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores); never changes outputs
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct MapArgs {
    #[command(flatten)]
    common: Common,
    /// Text corpus to remap
    #[arg(long, value_name = "FILE")]
    text: Option<PathBuf>,
    /// Seed of the character-to-token bijection
    #[arg(long)]
    seed: Option<u64>,
    /// Tokens per output sequence
    #[arg(long)]
    window: Option<usize>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MazeArgs {
    /// Maze side length (odd); standard sizes pick their reach reward
    #[arg(long)]
    size: Option<usize>,
    /// Task seed
    #[arg(long)]
    seed: Option<u64>,
}

impl MazeArgs {
    fn apply(&self, layers: &mut Layers) {
        layers.flag_opt("maze.size", self.size);
        layers.flag_opt("seed", self.seed);
    }
}

#[derive(Debug, Args)]
struct GenTaskArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    maze: MazeArgs,
    /// Target interior wall fraction
    #[arg(long)]
    density: Option<f64>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ShowArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    maze: MazeArgs,
    /// Task manifest (task.json from gen-task) instead of --size/--seed
    #[arg(long, value_name = "FILE", conflicts_with_all = ["size", "seed"])]
    task: Option<PathBuf>,
    /// Steps to play
    #[arg(long)]
    steps: Option<usize>,
    /// random or privileged:P
    #[arg(long)]
    policy: Option<String>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CollectArgs {
    #[command(flatten)]
    common: Common,
    /// Episodes to collect
    #[arg(long)]
    episodes: Option<usize>,
    /// Task pool size K, or "procedural" for a fresh task per episode
    #[arg(long, value_name = "K|procedural")]
    pool: Option<String>,
    /// Maze side length
    #[arg(long)]
    size: Option<usize>,
    /// Steps per episode
    #[arg(long)]
    episode_len: Option<usize>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Worker threads (0 = all cores); never changes outputs
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct MazeEvalArgs {
    #[command(flatten)]
    common: Common,
    /// random, privileged:P, wire:HOST:PORT or exec:COMMAND
    #[arg(long)]
    policy: Option<String>,
    /// Maze sizes, comma separated
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Tasks per size
    #[arg(long)]
    tasks: Option<usize>,
    /// Steps per episode
    #[arg(long)]
    horizon: Option<usize>,
    /// Reward subtracted per step
    #[arg(long)]
    step_cost: Option<f64>,
    /// Observation for external policies: frame or topdown
    #[arg(long)]
    obs: Option<String>,
    /// Per-message timeout for external policies, seconds
    #[arg(long, value_name = "SECS")]
    timeout: Option<f64>,
    /// Evaluation seed
    #[arg(long)]
    seed: Option<u64>,
    /// Also write an SVG plot
    #[arg(long)]
    svg: bool,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Worker threads (0 = all cores); never changes outputs
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct WmEvalArgs {
    #[command(flatten)]
    common: Common,
    /// oracle, repeat-last, wire:HOST:PORT or exec:COMMAND
    #[arg(long)]
    predictor: Option<String>,
    /// In-process policy driving the environment
    #[arg(long)]
    driver: Option<String>,
    /// Maze sizes, comma separated
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Tasks per size
    #[arg(long)]
    tasks: Option<usize>,
    /// Context lengths t, comma separated
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<usize>>,
    /// Rollout depths k, comma separated
    #[arg(long, value_delimiter = ',')]
    depths: Option<Vec<usize>>,
    /// Per-message timeout for external predictors, seconds
    #[arg(long, value_name = "SECS")]
    timeout: Option<f64>,
    /// Seed
    #[arg(long)]
    seed: Option<u64>,
    /// Also write an SVG plot
    #[arg(long)]
    svg: bool,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Worker threads (0 = all cores); never changes outputs
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    maze: MazeArgs,
    /// Timed frames
    #[arg(long)]
    frames: Option<usize>,
    /// Also write bench.json and a manifest here
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CurvesArgs {
    #[command(flatten)]
    common: Common,
    /// Per-position log (CSV: sequence,position,value); repeatable
    #[arg(long = "in", value_name = "FILE")]
    inputs: Vec<PathBuf>,
    /// nats, reward or mse
    #[arg(long)]
    metric: Option<String>,
    /// Log-spaced position buckets growing by this ratio
    #[arg(long)]
    bucket_ratio: Option<f64>,
    /// Also write an SVG plot
    #[arg(long)]
    svg: bool,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct WireAgentArgs {
    /// Serve episodes over TCP on this address instead of stdin/stdout
    #[arg(long, value_name = "ADDR")]
    listen: Option<String>,
    /// Exit after this many TCP episodes
    #[arg(long, requires = "listen")]
    episodes: Option<usize>,
    /// Seed of the random agent
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-message timeout, seconds
    #[arg(long, value_name = "SECS", default_value_t = 30.0)]
    timeout: f64,
}

#[derive(Debug, Args)]
struct RerunArgs {
    /// manifest.json of an earlier run
    manifest: PathBuf,
    /// Output directory for the new run
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SchemaArgs {
    /// Write one <command>.schema.json per config into DIR instead of printing
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn run_job<J: Job>(layers: Layers, out: Option<&Path>) -> anyhow::Result<()> {
    let job: J = jobs::resolve(&layers)?;
    jobs::run(&job, out)
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Metalang(MetalangCmd::Gen(a)) => {
            let mut l = a.common.layers()?;
            l.flag_opt("dataset.master_seed", a.seed);
            l.flag_opt("dataset.num_sequences", a.sequences);
            l.flag_opt("dataset.lang.seq_len", a.seq_len);
            l.flag_opt("dataset.mode", a.pool.map(|size| DatasetMode::Pool { size }));
            l.flag_opt("jobs", a.jobs);
            run_job::<metalang::GenJob>(l, Some(&a.out))
        }
        Command::Metalang(MetalangCmd::Calibrate(a)) => {
            let mut l = a.common.layers()?;
            l.flag_opt("lang.order", a.n);
            l.flag_opt("tasks", a.tasks);
            l.flag_opt("tokens", a.tokens);
            l.flag_opt("seed", a.seed);
            l.flag_opt("jobs", a.jobs);
            run_job::<metalang::CalibrateJob>(l, a.out.as_deref())
        }
        Command::Metalang(MetalangCmd::Map(a)) => {
            let mut l = a.common.layers()?;
            l.flag_opt("text", a.text.as_deref().map(path_str));
            l.flag_opt("seed", a.seed);
            l.flag_opt("window", a.window);
            run_job::<metalang::MapJob>(l, Some(&a.out))
        }
        Command::Maze(MazeCmd::GenTask(a)) => {
            let mut l = a.common.layers()?;
            a.maze.apply(&mut l);
            l.flag_opt("maze.obstacle_density", a.density);
            run_job::<task::GenTaskJob>(l, Some(&a.out))
        }
        Command::Maze(MazeCmd::Show(a)) => {
            let mut l = a.common.layers()?;
            if let Some(path) = &a.task {
                let m = config::read_json(path)?;
                let (Some(cfg), Some(seed)) = (m.get("config"), m.get("seed")) else {
                    return Err(config_error(format!("{} is not a task manifest", path.display())));
                };
                l.flag("maze", cfg);
                l.flag("seed", seed);
            }
            a.maze.apply(&mut l);
            l.flag_opt("steps", a.steps);
            l.flag_opt("policy", a.policy);
            run_job::<show::ShowJob>(l, Some(&a.out))
        }
        Command::Maze(MazeCmd::Collect(a)) => {
            let mut l = a.common.layers()?;
            l.flag_opt("episodes", a.episodes);
            match a.pool.as_deref() {
                None => {}
                Some("procedural") => l.flag("pool", serde_json::Value::Null),
                Some(k) => {
                    let k: usize = k.parse().map_err(|_| config_error(format!("--pool expects K or procedural, got {k:?}")))?;
                    l.flag("pool", k);
                }
            }
            l.flag_opt("maze.size", a.size);
            if let Some(n) = a.episode_len {
                l.flag("maze.episode_len", n);
                l.flag("rollout.episode_len", n);
            }
            l.flag_opt("seed", a.seed);
            l.flag_opt("jobs", a.jobs);
            run_job::<task::CollectJob>(l, Some(&a.out))
        }
        Command::Maze(MazeCmd::Eval(a)) => {
            let mut l = a.common.layers()?;
            l.flag_opt("policy", a.policy);
            l.flag_opt("eval.sizes", a.sizes);
            l.flag_opt("eval.num_tasks", a.tasks);
            l.flag_opt("eval.horizon", a.horizon);
            l.flag_opt("eval.step_cost", a.step_cost);
            l.flag_opt("eval.jobs", a.jobs);
            l.flag_opt("obs", a.obs);
            l.flag_opt("timeout_secs", a.timeout);
            l.flag_opt("seed", a.seed);
            if a.svg {
                l.flag("svg", true);
            }
            run_job::<interactive::EvalJob>(l, Some(&a.out))
        }
        Command::Maze(MazeCmd::WmEval(a)) => {
            let mut l = a.common.layers()?;
            l.flag_opt("predictor", a.predictor);
            l.flag_opt("driver", a.driver);
            l.flag_opt("wm.sizes", a.sizes);
            l.flag_opt("wm.num_tasks", a.tasks);
            l.flag_opt("wm.checkpoints", a.checkpoints);
            l.flag_opt("wm.depths", a.depths);
            l.flag_opt("wm.jobs", a.jobs);
            l.flag_opt("timeout_secs", a.timeout);
            l.flag_opt("seed", a.seed);
            if a.svg {
                l.flag("svg", true);
            }
            run_job::<wm::WmEvalJob>(l, Some(&a.out))
        }
        Command::Maze(MazeCmd::BenchFps(a)) => {
            let mut l = a.common.layers()?;
            a.maze.apply(&mut l);
            l.flag_opt("frames", a.frames);
            run_job::<bench::BenchJob>(l, a.out.as_deref())
        }
        Command::Eval(EvalCmd::Curves(a)) => {
            let mut l = a.common.layers()?;
            if !a.inputs.is_empty() {
                l.flag("inputs", a.inputs.iter().map(|p| path_str(p)).collect::<Vec<_>>());
            }
            l.flag_opt("metric", a.metric);
            l.flag_opt("bucket_ratio", a.bucket_ratio);
            if a.svg {
                l.flag("svg", true);
            }
            run_job::<curves::CurvesJob>(l, Some(&a.out))
        }
        Command::WireAgent(a) => {
            let timeout = interactive::timeout(a.timeout)?;
            match a.listen {
                Some(addr) => wire_agent::listen(&addr, a.seed, a.episodes, timeout),
                None => wire_agent::stdio(a.seed, timeout),
            }
        }
        Command::Rerun(a) => {
            let m = manifest::RunManifest::read(&a.manifest)?;
            jobs::rerun(&m, a.out.as_deref())
        }
        Command::Schema(a) => {
            let schemas = jobs::schemas();
            match a.out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    for (name, schema) in schemas {
                        let mut bytes = serde_json::to_vec_pretty(&schema)?;
                        bytes.push(b'\n');
                        jobs::write_file(&dir.join(name), &bytes)?;
                    }
                }
                None => {
                    let all: serde_json::Map<String, serde_json::Value> = schemas.into_iter().collect();
                    println!("{}", serde_json::to_string_pretty(&all)?);
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(ExitClass::Usage as u8) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e) as u8)
        }
    }
}
