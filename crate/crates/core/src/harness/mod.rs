//! Experiment harness behind the `curiosity` command: configuration files,
//! training, paired evaluation, reports, and scene dumps.

mod config;

pub use config::{preset, resolve, EvalConfig, ExperimentConfig, PRESETS};

use crate::agent::{
    evaluation_scene_seed, run_episode, training_scene_seed, AgentCheckpoint, AgentError, EpisodeStats, Network,
    NetworkPolicy, Policy, RandomPolicy, Trainer,
};
use crate::env::{EnvError, EpisodeEnv, EpisodeTrace, TimeParams};
use crate::metrics::{action_distribution, bin_performance, summarize_window, MetricsError};
use crate::orbit::{derive_geometry, GridPosition};
use crate::scene::{generate_scene, render_frame, write_ppm};
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("{0}")]
    Run(String),
    #[error("acceptance failure: {0}")]
    Acceptance(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Io(_) => 3,
            HarnessError::Acceptance(_) => 4,
            HarnessError::Run(_) => 1,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<AgentError> for HarnessError {
    fn from(e: AgentError) -> Self {
        match e {
            AgentError::Io(e) => HarnessError::Io(e.to_string()),
            AgentError::Shape(m) | AgentError::Config(m) => HarnessError::Config(m),
            AgentError::Checkpoint(m) => HarnessError::Io(m),
            AgentError::Env(EnvError::Config(m)) => HarnessError::Config(m),
            other => HarnessError::Run(other.to_string()),
        }
    }
}

impl From<EnvError> for HarnessError {
    fn from(e: EnvError) -> Self {
        AgentError::from(e).into()
    }
}

impl From<MetricsError> for HarnessError {
    fn from(e: MetricsError) -> Self {
        HarnessError::Run(e.to_string())
    }
}

fn create_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))
}

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const CONFIG_SNAPSHOT_FILE: &str = "config.cfg";
/// Episodes between checkpoint rewrites during training.
pub const CHECKPOINT_EVERY: u64 = 50;

/// Trains an agent without touching the file system.
pub fn train(cfg: &ExperimentConfig, mut on_episode: impl FnMut(&EpisodeStats)) -> Result<AgentCheckpoint, HarnessError> {
    let mut trainer = Trainer::new(cfg.train_env_config(), cfg.agent.clone())?;
    trainer.train(|s, _| on_episode(s))?;
    Ok(trainer.checkpoint())
}

/// Trains an agent, writing the checkpoint, a per-episode log, and the
/// resolved configuration into `out`.
pub fn run_train(
    cfg: &ExperimentConfig,
    out: &Path,
    mut progress: impl FnMut(&EpisodeStats),
) -> Result<AgentCheckpoint, HarnessError> {
    create_dir(out)?;
    fs::write(out.join(CONFIG_SNAPSHOT_FILE), cfg.to_toml())?;
    let mut log = csv::Writer::from_path(out.join(TRAIN_LOG_FILE))?;
    log.write_record([
        "episode", "scene_seed", "steps", "t_elapsed", "interactions", "total_reward", "final_ap", "win", "epsilon", "mean_loss",
    ])?;
    let mut trainer = Trainer::new(cfg.train_env_config(), cfg.agent.clone())?;
    let mut io_error = None;
    trainer.train(|s, t| {
        let row = [
            s.episode.to_string(),
            s.scene_seed.to_string(),
            s.steps.to_string(),
            s.t_elapsed.to_string(),
            s.interactions.to_string(),
            s.total_reward.to_string(),
            s.final_ap.to_string(),
            s.win.to_string(),
            s.epsilon.to_string(),
            s.mean_loss.map(|l| l.to_string()).unwrap_or_default(),
        ];
        let mut result = log.write_record(&row).map_err(HarnessError::from);
        if result.is_ok() && (s.episode + 1) % CHECKPOINT_EVERY == 0 {
            result = t.checkpoint().save_file(&out.join(CHECKPOINT_FILE)).map_err(HarnessError::from);
        }
        if let Err(e) = result {
            io_error.get_or_insert(e);
        }
        progress(s);
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    log.flush()?;
    let ckpt = trainer.checkpoint();
    ckpt.save_file(&out.join(CHECKPOINT_FILE))?;
    Ok(ckpt)
}

/// Which policy `eval` runs.
#[derive(Debug, Clone)]
pub enum PolicySpec {
    Random,
    Network(Network),
}

impl PolicySpec {
    /// `"random"` or a checkpoint path.
    pub fn parse(spec: &str) -> Result<Self, HarnessError> {
        if spec == "random" {
            return Ok(PolicySpec::Random);
        }
        let path = Path::new(spec);
        if !path.exists() {
            return Err(HarnessError::Io(format!("{spec}: checkpoint not found")));
        }
        Ok(PolicySpec::Network(AgentCheckpoint::load_file(path)?.online))
    }

    fn policy(&self, seed: u64, epsilon: f64) -> Box<dyn Policy> {
        match self {
            PolicySpec::Random => Box::new(RandomPolicy::new(seed)),
            PolicySpec::Network(net) => Box::new(NetworkPolicy::new(net.clone(), epsilon, seed)),
        }
    }
}

/// Held-out scene seeds of an evaluation, shared by every strategy.
pub fn evaluation_seeds(cfg: &EvalConfig) -> Vec<u64> {
    (cfg.first_scene..cfg.first_scene + cfg.n_scenes).map(evaluation_scene_seed).collect()
}

/// Runs evaluation episodes and returns their traces, one per scene.
pub fn evaluate(
    cfg: &ExperimentConfig,
    policy: &PolicySpec,
    time: Option<TimeParams>,
) -> Result<Vec<EpisodeTrace>, HarnessError> {
    if let PolicySpec::Network(net) = policy {
        if net.shape.image_size != cfg.scene.image_size {
            return Err(HarnessError::Config(format!(
                "checkpoint expects {}px views, config renders {}px",
                net.shape.image_size, cfg.scene.image_size
            )));
        }
    }
    let mut env = EpisodeEnv::new(cfg.eval_env_config(time))?;
    let mut traces = Vec::new();
    for (i, seed) in evaluation_seeds(&cfg.evaluation).into_iter().enumerate() {
        let mut p = policy.policy(training_scene_seed(cfg.evaluation.policy_seed, i as u64), cfg.evaluation.epsilon);
        traces.push(run_episode(&mut env, p.as_mut(), seed)?);
    }
    Ok(traces)
}

pub fn trace_file_name(index: usize) -> String {
    format!("episode_{index:04}.jsonl")
}

/// Evaluates and writes one JSON Lines trace per scene into `out`.
pub fn run_eval(
    cfg: &ExperimentConfig,
    policy: &PolicySpec,
    time: Option<TimeParams>,
    out: &Path,
) -> Result<Vec<EpisodeTrace>, HarnessError> {
    create_dir(out)?;
    let traces = evaluate(cfg, policy, time)?;
    for (i, t) in traces.iter().enumerate() {
        let mut w = BufWriter::new(fs::File::create(out.join(trace_file_name(i)))?);
        t.write_jsonl(&mut w)?;
        w.flush()?;
    }
    Ok(traces)
}

/// Reads every `.jsonl` trace in `dir`, in file-name order.
pub fn read_traces(dir: &Path) -> Result<Vec<EpisodeTrace>, HarnessError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            EpisodeTrace::read_jsonl(BufReader::new(fs::File::open(p)?))
                .map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))
        })
        .collect()
}

/// Window used for the short-horizon ITB column.
pub const FIRST_WINDOW_SECONDS: f64 = 60.0;

/// Writes `itb_summary.csv`, and `curve_<name>.csv` and
/// `actions_<name>.csv` per strategy.
pub fn run_report(strategies: &[(String, Vec<EpisodeTrace>)], horizon: usize, out: &Path) -> Result<(), HarnessError> {
    if strategies.is_empty() || strategies.iter().any(|(_, t)| t.is_empty()) {
        return Err(HarnessError::Run("report needs at least one non-empty trace set".into()));
    }
    create_dir(out)?;
    let mut summary = csv::Writer::from_path(out.join("itb_summary.csv"))?;
    summary.write_record(["strategy", "window", "itb_time", "itb_user"])?;
    for (name, traces) in strategies {
        for (window, seconds) in [("full", None), ("first_60s", Some(FIRST_WINDOW_SECONDS))] {
            let w = summarize_window(traces, window, seconds)?;
            summary.write_record([
                name.clone(),
                w.window,
                w.itb_time.to_string(),
                w.itb_user.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        let curve = bin_performance(traces, horizon)?;
        let mut c = csv::Writer::from_path(out.join(format!("curve_{name}.csv")))?;
        c.write_record(["bin_seconds", "mean_ap"])?;
        for (i, v) in curve.bins.iter().enumerate() {
            c.write_record([i.to_string(), v.to_string()])?;
        }
        c.flush()?;
        let mut a = csv::Writer::from_path(out.join(format!("actions_{name}.csv")))?;
        a.write_record(["category", "fraction"])?;
        for (cat, f) in action_distribution(traces)?.rows() {
            a.write_record([cat.to_string(), f.to_string()])?;
        }
        a.flush()?;
    }
    summary.flush()?;
    Ok(())
}

/// Renders views of the scene generated from `seed` as PPM files named
/// `scene<seed>_k<k>_j<j>.ppm`. `position = None` dumps every view.
pub fn render_scene(
    cfg: &ExperimentConfig,
    seed: u64,
    position: Option<GridPosition>,
    out: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    create_dir(out)?;
    let env = cfg.train_env_config();
    let geom = derive_geometry(env.orbit).map_err(|e| HarnessError::Config(e.to_string()))?;
    let scene_cfg = crate::scene::SceneConfig { flight_height: geom.height, orbit_radius: geom.r_max, ..env.scene };
    let scene = generate_scene(&scene_cfg, seed).map_err(|e| HarnessError::Config(e.to_string()))?;
    let positions: Vec<GridPosition> = match position {
        Some(p) if geom.contains(p) => vec![p],
        Some(p) => return Err(HarnessError::Config(format!("position k={} j={} is outside the grid", p.orbit, p.angle))),
        None => geom.positions().collect(),
    };
    let mut written = Vec::new();
    for p in positions {
        let (img, _) = render_frame(&scene, &geom.camera_pose(p, scene.aim_point()), &scene_cfg);
        let path = out.join(format!("scene{seed}_k{}_j{}.ppm", p.orbit, p.angle));
        let mut w = BufWriter::new(fs::File::create(&path)?);
        write_ppm(&mut w, &img)?;
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}
