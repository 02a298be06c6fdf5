//! End-to-end harness runs at a very small scale: train, evaluate, report,
//! and the command-line front end.

use curiosity::agent::AgentCheckpoint;
use curiosity::harness::{
    preset, read_traces, render_scene, resolve, run_eval, run_report, run_train, ExperimentConfig, HarnessError,
    PolicySpec, CHECKPOINT_FILE, TRAIN_LOG_FILE,
};
use curiosity::orbit::GridPosition;
use std::fs;
use std::path::Path;
use std::process::Command;

fn tiny() -> ExperimentConfig {
    let mut c = preset("mini_agent_a").unwrap();
    c.episode.max_action_steps = 30;
    c.agent.episodes = 4;
    c.agent.warmup_steps = 40;
    c.agent.train_every = 4;
    c.agent.batch_size = 2;
    c.agent.seq_len = 4;
    c.evaluation.n_scenes = 2;
    c.evaluation.time_budget = 15.0;
    c
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn pipeline(cfg: &ExperimentConfig, dir: &Path) -> Vec<(String, Vec<u8>)> {
    let ckpt = run_train(cfg, &dir.join("train"), |_| {}).unwrap();
    let loaded = AgentCheckpoint::load_file(&dir.join("train").join(CHECKPOINT_FILE)).unwrap();
    assert_eq!(loaded.online.params, ckpt.online.params);
    assert_eq!(loaded.episodes, cfg.agent.episodes);
    let log = fs::read_to_string(dir.join("train").join(TRAIN_LOG_FILE)).unwrap();
    assert_eq!(log.lines().count() as u64, cfg.agent.episodes + 1);

    let agent = run_eval(cfg, &PolicySpec::Network(ckpt.online), None, &dir.join("agent")).unwrap();
    let random = run_eval(cfg, &PolicySpec::Random, None, &dir.join("random")).unwrap();
    assert_eq!(read_traces(&dir.join("agent")).unwrap(), agent);
    for t in agent.iter().chain(&random) {
        let last = t.final_record().unwrap();
        assert!(last.done && last.t_elapsed >= cfg.evaluation.time_budget);
        assert_eq!(t.records[0].action_id, None);
    }
    run_report(&[("agent".into(), agent), ("random".into(), random)], 15, &dir.join("report")).unwrap();
    read_dir_bytes(&dir.join("report"))
}

#[test]
fn train_eval_report_is_deterministic() {
    let cfg = tiny();
    let tmp = tempfile::tempdir().unwrap();
    let first = pipeline(&cfg, &tmp.path().join("a"));
    let second = pipeline(&cfg, &tmp.path().join("b"));
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        ["actions_agent.csv", "actions_random.csv", "curve_agent.csv", "curve_random.csv", "itb_summary.csv"]
    );
    assert_eq!(first, second);
    let summary = String::from_utf8(first[4].1.clone()).unwrap();
    assert!(summary.starts_with("strategy,window,itb_time,itb_user\n"));
    assert_eq!(summary.lines().count(), 5);
}

#[test]
fn config_snapshot_reloads_to_the_same_experiment() {
    let cfg = tiny();
    let tmp = tempfile::tempdir().unwrap();
    run_train(&cfg, tmp.path(), |_| {}).unwrap();
    let back = ExperimentConfig::load(&tmp.path().join("config.cfg")).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn error_kinds_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = resolve("/nonexistent/experiment.cfg").unwrap_err();
    assert_eq!(missing.exit_code(), 3);
    let bad = tmp.path().join("bad.cfg");
    fs::write(&bad, "[reward]\nw_p = 2.0\n").unwrap();
    assert!(matches!(resolve(bad.to_str().unwrap()), Err(HarnessError::Config(_))));
    assert_eq!(HarnessError::Acceptance("x".into()).exit_code(), 4);
    assert!(matches!(PolicySpec::parse("/nonexistent/ckpt.bin"), Err(HarnessError::Io(_))));
}

#[test]
fn render_scene_writes_ppm_views() {
    let cfg = preset("mini_agent_a").unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let one = render_scene(&cfg, 5, Some(GridPosition::new(2, 3)), tmp.path()).unwrap();
    assert_eq!(one.len(), 1);
    let bytes = fs::read(&one[0]).unwrap();
    assert!(bytes.starts_with(b"P6\n36 36\n255\n"));
    assert_eq!(bytes.len(), b"P6\n36 36\n255\n".len() + 36 * 36 * 3);
    let all = render_scene(&cfg, 5, None, &tmp.path().join("all")).unwrap();
    assert_eq!(all.len(), 36);
    assert!(render_scene(&cfg, 5, Some(GridPosition::new(4, 0)), tmp.path()).is_err());
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_curiosity")).args(args).output().unwrap()
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("views");
    let ok = cli(&["render-scene", "--config", "mini_agent_a", "--seed", "2", "--out", out.to_str().unwrap(), "--orbit", "1", "--angle", "0"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(out.join("scene2_k1_j0.ppm").exists());

    let bad = tmp.path().join("bad.cfg");
    fs::write(&bad, "[time]\nt_clik = 1.0\n").unwrap();
    let r = cli(&["train", "--config", bad.to_str().unwrap(), "--out", tmp.path().join("t").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    let r = cli(&["eval", "--config", "mini_agent_a", "--policy", "/nonexistent.bin", "--out", tmp.path().join("e").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn cli_train_eval_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("tiny.cfg");
    fs::write(&cfg_path, tiny().to_toml()).unwrap();
    let cfg = cfg_path.to_str().unwrap();
    let p = |s: &str| tmp.path().join(s).to_string_lossy().into_owned();
    let r = cli(&["train", "--config", cfg, "--out", &p("train"), "--episodes", "2"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let ckpt = p("train/checkpoint.bin");
    let r = cli(&["eval", "--config", cfg, "--policy", &ckpt, "--out", &p("agent"), "--time-from", "mini_agent_b"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let r = cli(&["eval", "--config", cfg, "--policy", "random", "--out", &p("random"), "--scenes", "3"]);
    assert!(r.status.success());
    assert_eq!(read_traces(Path::new(&p("random"))).unwrap().len(), 3);
    let agent_arg = format!("agent={}", p("agent"));
    let random_arg = format!("random={}", p("random"));
    let r = cli(&["report", "--traces", &agent_arg, "--traces", &random_arg, "--out", &p("report"), "--horizon", "15"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(Path::new(&p("report/curve_random.csv")).exists());
}
