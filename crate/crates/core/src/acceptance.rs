//! Self-checks behind `curiosity selftest` and the `acceptance` test target.
//!
//! Criteria 1 to 7 are exact or property checks and finish in minutes.
//! Criteria 8 to 11 train mini-scale agents and compare them directionally;
//! they form the extended tier.

use crate::agent::{gradient_check, ConvSpec, NetInput, Network, NetworkShape, N_ACTIONS};
use crate::env::{elapsed_time, reward_components, Action, EnvConfig, EpisodeEnv, EpisodeTrace, RewardWeights, TimeParams};
use crate::harness::{self, preset, ExperimentConfig, PolicySpec};
use crate::metrics::{action_distribution, bin_performance, interaction_fraction, summarize_window};
use crate::orbit::{derive_geometry, GridPosition, OrbitSpaceConfig};
use crate::scene::{generate_scene, render_frame, SceneConfig, ViewImage};
use crate::trainee::{
    average_precision, evaluate_ap_features, iou, BBox, Detection, DetectorConfig, DetectorModel, ViewFeatures,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::fmt;
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:2} {} {}: {} ({:.1} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.seconds
        )
    }
}

pub const QUICK: [u8; 7] = [1, 2, 3, 4, 5, 6, 7];
pub const EXTENDED: [u8; 4] = [8, 9, 10, 11];

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "time model",
        2 => "reward decomposition",
        3 => "orbit geometry",
        4 => "AP oracle equivalence",
        5 => "gradient checks",
        6 => "trainee learning curve",
        7 => "episode algorithm conformance",
        8 => "agent beats random (mini)",
        9 => "w_n trend (mini)",
        10 => "Agent B moves more (mini)",
        11 => "determinism (mini)",
        _ => "unknown",
    }
}

/// Outcome of one check: pass flag and a one-line summary.
type Check = (bool, String);

/// Runs one quick criterion.
pub fn run_quick(id: u8) -> CriterionResult {
    timed(id, || match id {
        1 => time_model(),
        2 => rewards(),
        3 => geometry(),
        4 => ap_oracle(),
        5 => gradients(),
        6 => learning_curve(),
        7 => conformance(),
        _ => (false, format!("criterion {id} is not a quick criterion")),
    })
}

fn timed(id: u8, f: impl FnOnce() -> Check) -> CriterionResult {
    let start = Instant::now();
    let (passed, detail) = f();
    CriterionResult { id, title: title(id), passed, detail, seconds: start.elapsed().as_secs_f64() }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn time_model() -> Check {
    let g = derive_geometry(OrbitSpaceConfig::default()).expect("default geometry");
    let (a, b) = (TimeParams::AGENT_A, TimeParams::AGENT_B);
    // Radii from first principles: orbit k sits at k * d cos(theta) / n.
    let radius = |k: f64| k * 60.0 * (30.0f64).to_radians().cos() / 6.0;
    let arc = |k: f64| radius(k) * (12.0f64).to_radians();
    let dr = radius(1.0);
    let p = GridPosition::new;
    let cases: [(&str, Action, GridPosition, bool, TimeParams, f64); 14] = [
        ("left, outer orbit, A, trained", Action::MoveLeft, p(6, 0), true, a, arc(6.0) / 2.5),
        ("forward, B, trained", Action::MoveForward, p(6, 0), true, b, 2.5),
        ("request, A, trained", Action::RequestUser, p(6, 0), true, a, 0.9 + 0.305),
        ("left, orbit 1, A, trained", Action::MoveLeft, p(1, 4), true, a, arc(1.0) / 2.5),
        ("right, orbit 3, A", Action::MoveRight, p(3, 0), false, a, arc(3.0) / 2.5),
        ("forward, orbit 4, A", Action::MoveForward, p(4, 9), false, a, dr / 2.5),
        ("backward, orbit 2, A, trained", Action::MoveBackward, p(2, 29), true, a, dr / 2.5),
        ("blocked backward, outer, A, trained", Action::MoveBackward, p(6, 3), true, a, 0.305),
        ("blocked forward, orbit 1, B", Action::MoveForward, p(1, 3), false, b, 2.5),
        ("stay, B, trained", Action::DontMove, p(5, 7), true, b, 2.5),
        ("stay, A", Action::DontMove, p(5, 7), false, a, 0.305),
        ("request without annotation, B", Action::RequestUser, p(2, 2), false, b, 0.9),
        ("request, B, trained", Action::RequestUser, p(2, 2), true, b, 3.4),
        ("left, orbit 1, B, trained", Action::MoveLeft, p(1, 0), true, b, 2.5),
    ];
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (name, action, pos, trained, params, expected) in cases {
        let t = elapsed_time(action, pos, trained, &params, &g);
        worst = worst.max((t - expected).abs());
        if !close(t, expected, 1e-9) {
            failures.push(format!("{name}: {t} != {expected}"));
        }
    }
    // The quoted four-decimal figure.
    let first = elapsed_time(Action::MoveLeft, p(6, 0), true, &a, &g);
    if !close(first, 4.3531, 5e-5) {
        failures.push(format!("outer-orbit move {first} does not round to 4.3531"));
    }
    let extra = elapsed_time(Action::MoveLeft, p(6, 0), false, &b, &g);
    if !close(extra, arc(6.0) / 10.0, 1e-9) {
        failures.push(format!("untrained outer move at 10 m/s: {extra}"));
    }
    if failures.is_empty() {
        (true, format!("{} cases, max abs error {worst:.1e} s", cases.len() + 1))
    } else {
        (false, failures.join("; "))
    }
}

fn rewards() -> Check {
    let w = RewardWeights { w_p: 0.5, w_n: 0.5, c_t: 0.08 };
    let anchor = reward_components(0.0, Action::DontMove, 2.5, &w, false).r_time;
    let composite = reward_components(0.05, Action::MoveLeft, 2.5, &w, false);
    let mut failures = Vec::new();
    if !close(anchor, -0.2, 1e-15) {
        failures.push(format!("R_time(2.5 s) = {anchor}"));
    }
    if !close(composite.r_total, 0.2, 1e-15) || !close(composite.r_learn, 0.5, 1e-15) {
        failures.push(format!("composite example gave {composite:?}"));
    }
    if reward_components(0.4, Action::RequestUser, 3.0, &w, true).r_total != 1.0 {
        failures.push("win step not worth 1".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0usize;
    for _ in 0..10_000 {
        let d = rng.gen_range(-1.0..=1.0);
        let action = Action::ALL[rng.gen_range(0..Action::COUNT)];
        let w = RewardWeights { w_p: rng.gen_range(0.0..=1.0), w_n: rng.gen_range(0.0..=1.0), c_t: 0.08 };
        let t = rng.gen_range(0.0..=12.5);
        let r = reward_components(d, action, t, &w, false);
        let composed = w.w_p * r.r_learn + (1.0 - w.w_p) * (w.w_n * r.r_behave + (1.0 - w.w_n) * r.r_time);
        let ok = (-1.0..=1.0).contains(&r.r_learn)
            && (r.r_behave == 0.0 || r.r_behave == -1.0)
            && (r.r_behave == -1.0) == (action == Action::RequestUser)
            && r.r_time.abs() <= w.c_t * t + 1e-15
            && close(r.r_total, composed, 1e-12)
            && r.r_total.abs() <= 1.0 + 1e-12;
        if !ok {
            bad += 1;
        }
    }
    if bad > 0 {
        failures.push(format!("{bad} of 10000 random inputs violate the component ranges or composition"));
    }
    if failures.is_empty() {
        (true, format!("R_time(2.5 s) = {anchor}, composite = {}, 10000 random inputs ok", composite.r_total))
    } else {
        (false, failures.join("; "))
    }
}

fn geometry() -> Check {
    match derive_geometry(OrbitSpaceConfig { d: 60.0, theta: 30.0, delta_alpha: 12.0, n_orbits: 6 }) {
        Ok(g) => {
            let ok = close(g.delta_r, 8.66, 0.005) && close(g.r_max, 51.9615, 5e-5) && g.n_angles == 30;
            (ok, format!("delta_r = {:.4} m, r_max = {:.4} m, n_angles = {}", g.delta_r, g.r_max, g.n_angles))
        }
        Err(e) => (false, e.to_string()),
    }
}

/// AP by enumerating every confidence threshold. Each view holds at most one
/// truth, so a view contributes a true positive at threshold `tau` exactly
/// when one of its detections at or above `tau` overlaps the truth.
pub fn brute_force_ap(detections: &[Vec<Detection>], truths: &[Option<BBox>]) -> f64 {
    let n_pos = truths.iter().filter(|t| t.is_some()).count();
    if n_pos == 0 {
        return 0.0;
    }
    let mut thresholds: Vec<f64> = detections.iter().flatten().map(|d| d.confidence).collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let points: Vec<(f64, f64)> = thresholds
        .iter()
        .map(|&tau| {
            let mut kept = 0usize;
            let mut tp = 0usize;
            for (ds, truth) in detections.iter().zip(truths) {
                let above: Vec<&Detection> = ds.iter().filter(|d| d.confidence >= tau).collect();
                kept += above.len();
                if let Some(gt) = truth {
                    if above.iter().any(|d| iou(&d.bbox, gt) >= 0.5) {
                        tp += 1;
                    }
                }
            }
            (tp as f64 / n_pos as f64, tp as f64 / kept as f64)
        })
        .collect();
    let mut recalls: Vec<f64> = points.iter().map(|p| p.0).filter(|r| *r > 0.0).collect();
    recalls.sort_by(f64::total_cmp);
    recalls.dedup();
    let mut ap = 0.0;
    let mut prev = 0.0;
    for r in recalls {
        let best = points.iter().filter(|p| p.0 >= r).map(|p| p.1).fold(0.0, f64::max);
        ap += (r - prev) * best;
        prev = r;
    }
    ap
}

/// Small random AP instance: coarse boxes and confidences so that overlaps
/// and ties are common.
pub fn random_ap_instance(rng: &mut impl Rng) -> (Vec<Vec<Detection>>, Vec<Option<BBox>>) {
    let n_views = rng.gen_range(1..=6);
    let coarse_box = |rng: &mut dyn rand::RngCore| {
        BBox::new(
            rng.gen_range(0..6) as f64 * 2.0,
            rng.gen_range(0..6) as f64 * 2.0,
            rng.gen_range(2..6) as f64 * 2.0,
            rng.gen_range(2..6) as f64 * 2.0,
        )
    };
    let mut detections = Vec::new();
    let mut truths = Vec::new();
    for _ in 0..n_views {
        let truth = if rng.gen_bool(0.8) { Some(coarse_box(rng)) } else { None };
        let n = rng.gen_range(0..=4);
        let mut ds: Vec<Detection> = (0..n)
            .map(|_| {
                let bbox = match truth {
                    Some(gt) if rng.gen_bool(0.5) => BBox::new(gt.x + rng.gen_range(-1..=1) as f64, gt.y, gt.w, gt.h),
                    _ => coarse_box(rng),
                };
                Detection { bbox, confidence: rng.gen_range(1..=9) as f64 / 10.0 }
            })
            .collect();
        ds.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
        detections.push(ds);
        truths.push(truth);
    }
    (detections, truths)
}

fn ap_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = Vec::new();
    let mut nonzero = 0;
    for i in 0..200 {
        let (dets, truths) = random_ap_instance(&mut rng);
        let fast = average_precision(&dets, &truths);
        let slow = brute_force_ap(&dets, &truths);
        if fast > 0.0 {
            nonzero += 1;
        }
        if fast != slow {
            mismatches.push(format!("instance {i}: {fast} vs {slow}"));
        }
    }
    if mismatches.is_empty() {
        (true, format!("200 instances equal exactly ({nonzero} with AP > 0)"))
    } else {
        (false, format!("{} mismatches, first {}", mismatches.len(), mismatches[0]))
    }
}

fn detector_gradient_error() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut m = DetectorModel::new(DetectorConfig { grid_size: 3, ..DetectorConfig::default() }).expect("config");
    m.weights.iter_mut().for_each(|w| *w = rng.gen_range(-1.0..1.0));
    let mut view = ViewImage::new(24);
    view.pixels.iter_mut().for_each(|p| *p = rng.gen());
    let f = m.features(&view);
    let t = m.targets(&f, &BBox::new(5.0, 7.0, 9.0, 6.0));
    let g = m.gradient(&f, &t);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..m.weights.len() {
        let mut up = m.clone();
        up.weights[i] += h;
        let mut down = m.clone();
        down.weights[i] -= h;
        let fd = (up.loss(&f, &t) - down.loss(&f, &t)) / (2.0 * h);
        let scale = fd.abs().max(g[i].abs());
        if scale >= 1e-9 {
            worst = worst.max((fd - g[i]).abs() / scale);
        }
    }
    worst
}

fn q_network_gradient_error() -> f64 {
    let shape = NetworkShape {
        image_size: 8,
        in_channels: 5,
        conv: vec![ConvSpec { out_channels: 2, kernel: 3, stride: 2 }, ConvSpec { out_channels: 3, kernel: 2, stride: 1 }],
        fc: 5,
        pos_fc: 2,
        fusion: vec![6, 4],
        hidden: 16,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let net = Network::new(shape, &mut rng).expect("valid shape");
    let inputs: Vec<NetInput> = (0..4)
        .map(|_| NetInput { planes: (0..320).map(|_| rng.gen::<f64>()).collect(), position: [rng.gen(), rng.gen()] })
        .collect();
    let actions: Vec<usize> = (0..4).map(|_| rng.gen_range(0..N_ACTIONS)).collect();
    let targets: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    gradient_check(&net, &inputs, &actions, &targets, 1e-4)
}

fn gradients() -> Check {
    let det = detector_gradient_error();
    let q = q_network_gradient_error();
    (det < 1e-4 && q < 1e-4, format!("max relative error: detector {det:.2e}, Q-network {q:.2e}"))
}

/// AP gain of a fresh detector after `rounds` ground-truth rounds cycled over
/// 20 visible poses of one full-scale scene.
pub fn oracle_fed_gain(seed: u64, rounds: usize) -> f64 {
    let geom = derive_geometry(OrbitSpaceConfig::default()).expect("default geometry");
    let scene_config = SceneConfig { orbit_radius: geom.r_max, flight_height: geom.height, ..SceneConfig::default() };
    let scene = generate_scene(&scene_config, seed).expect("default scene config");
    let det_config = DetectorConfig::default();
    let views: Vec<(ViewFeatures, Option<BBox>)> = geom
        .positions()
        .map(|p| {
            let (img, gt) = render_frame(&scene, &geom.camera_pose(p, scene.aim_point()), &scene_config);
            (ViewFeatures::new(&img, det_config.grid_size), gt.bbox)
        })
        .collect();
    let all: Vec<(&ViewFeatures, Option<BBox>)> = views.iter().map(|(f, b)| (f, *b)).collect();
    let visible: Vec<usize> = (0..views.len()).filter(|&i| views[i].1.is_some()).collect();
    if visible.is_empty() {
        return 0.0;
    }
    let n_poses = visible.len().min(20);
    let poses: Vec<usize> = (0..n_poses).map(|k| visible[k * visible.len() / n_poses]).collect();
    let mut model = DetectorModel::new(det_config).expect("default detector config");
    let base = evaluate_ap_features(&model, &all).expect("views");
    for r in 0..rounds {
        let i = poses[r % poses.len()];
        model = model.training_round_features(&views[i].0, views[i].1.as_ref()).expect("visible pose");
    }
    evaluate_ap_features(&model, &all).expect("views") - base
}

fn learning_curve() -> Check {
    let gains: Vec<f64> = (1..=5).map(|s| oracle_fed_gain(s, 200)).collect();
    let mean = gains.iter().sum::<f64>() / gains.len() as f64;
    let listed: Vec<String> = gains.iter().map(|g| format!("{g:.3}")).collect();
    (mean >= 0.3, format!("mean AP gain {mean:.3} over scenes 1-5 [{}]", listed.join(", ")))
}

fn conformance_env(max_steps: u64) -> EnvConfig {
    let mut c = EnvConfig::default();
    c.orbit.n_orbits = 3;
    c.orbit.delta_alpha = 30.0;
    c.scene.image_size = 36;
    c.episode.subsample_size = 12;
    c.episode.max_action_steps = max_steps;
    c
}

/// Scripted walk through every action case plus both win conditions and the
/// step-limit timeout. Returns the list of violated expectations.
fn conformance_failures() -> Vec<String> {
    let mut fails = Vec::new();
    let mut expect = |ok: bool, what: &str| {
        if !ok {
            fails.push(what.to_string());
        }
    };

    let mut env = EpisodeEnv::new(conformance_env(10_000)).expect("valid env");
    let seed = (0..200u64)
        .find(|&s| {
            env.reset(s).expect("reset");
            env.view(env.position()).1.bbox.is_some_and(|b| b.w >= 4.0 && b.h >= 4.0)
        })
        .expect("some scene shows the subject from the start position");
    env.reset(seed).expect("reset");
    let time = env.config().time;
    let g = *env.geometry();
    expect(env.position() == GridPosition::new(3, 0), "reset starts on the outer orbit at angle 0");
    expect(env.tracked_box().is_none(), "reset starts without tracking");

    // DontMove, nothing tracked: no round, idle time, no move.
    let (_, o) = env.step(Action::DontMove).expect("step");
    expect(!o.trained && o.t_i == time.t_idle && o.u_i == 0, "idle DontMove");
    expect(env.training_rounds() == 0 && env.position() == GridPosition::new(3, 0), "idle DontMove side effects");

    // RequestUser with the subject in view: annotation, round, tracker init.
    let (_, o) = env.step(Action::RequestUser).expect("step");
    expect(o.u_i == 1 && o.trained && o.tracker_initialized, "RequestUser trains and starts tracking");
    expect(env.training_rounds() == 1, "RequestUser runs exactly one round");
    expect(close(o.t_i, time.t_click + time.t_train, 1e-12), "RequestUser time");

    // Tracked DontMove: a round on the current view.
    if env.tracked_box().is_some() {
        let (_, o) = env.step(Action::DontMove).expect("step");
        expect(o.trained && o.t_i == time.t_train && env.training_rounds() == 2, "tracked DontMove trains");
    } else {
        expect(false, "tracker lost the subject without moving");
    }

    // Moves: training on the pre-move view when tracking is active, then the
    // position update with wrap-around and clamping.
    let before = env.training_rounds();
    let tracking = env.tracked_box().is_some();
    let (_, o) = env.step(Action::MoveLeft).expect("step");
    expect(env.position() == GridPosition::new(3, 1), "MoveLeft increases the angle");
    expect(o.trained == tracking && env.training_rounds() == before + tracking as u64, "MoveLeft trains iff tracking");
    let t_move = g.arc_length(3) / time.s_a;
    let t_expected = if tracking { t_move.max(time.t_train) } else { t_move };
    expect(close(o.t_i, t_expected, 1e-12), "MoveLeft time");

    env.step(Action::MoveRight).expect("step");
    env.step(Action::MoveRight).expect("step");
    expect(env.position() == GridPosition::new(3, 11), "MoveRight wraps below angle 0");
    let (_, o) = env.step(Action::MoveBackward).expect("step");
    expect(env.position() == GridPosition::new(3, 11), "MoveBackward clamps at the outer orbit");
    expect(o.t_i == if o.trained { time.t_train } else { time.t_idle }, "blocked move costs a stay");
    for _ in 0..2 {
        env.step(Action::MoveForward).expect("step");
    }
    expect(env.position() == GridPosition::new(1, 11), "MoveForward reaches the inner orbit");
    env.step(Action::MoveForward).expect("step");
    expect(env.position() == GridPosition::new(1, 11), "MoveForward clamps at the inner orbit");

    // RequestUser where the annotator has nothing to give.
    let mut hidden = EpisodeEnv::new(conformance_env(10_000)).expect("valid env");
    let hidden_seed = (0..400u64).find(|&s| {
        hidden.reset(s).expect("reset");
        hidden.view(hidden.position()).1.bbox.is_none()
    });
    if let Some(s) = hidden_seed {
        hidden.reset(s).expect("reset");
        let (_, o) = hidden.step(Action::RequestUser).expect("step");
        expect(o.u_i == 1 && !o.trained && o.annotation_missing, "RequestUser without a visible subject");
        expect(o.t_i == time.t_click && hidden.training_rounds() == 0, "unanswered RequestUser time");
    }

    // Win by absolute AP.
    env.inject_ap([0.0, 0.5, 0.85]);
    env.reset(seed).expect("reset");
    let (_, o) = env.step(Action::DontMove).expect("step");
    expect(!o.done && !o.win, "AP 0.5 is not a win");
    let (_, o) = env.step(Action::DontMove).expect("step");
    expect(o.done && o.win && o.rewards.r_total == 1.0, "AP 0.85 wins with reward 1");
    expect(env.step(Action::DontMove).is_err(), "stepping a finished episode fails");

    // Win by gain.
    env.inject_ap([0.1, 0.79, 0.8]);
    env.reset(seed).expect("reset");
    let (_, o) = env.step(Action::DontMove).expect("step");
    expect(!o.win, "gain 0.69 is not a win");
    let (_, o) = env.step(Action::DontMove).expect("step");
    expect(o.done && o.win && o.rewards.r_total == 1.0, "gain 0.70 wins with reward 1");

    // Timeout after 10,000 action-steps, last step rewarded as normal.
    env.reset(seed).expect("reset");
    let mut last = None;
    for _ in 0..10_000 {
        if env.is_done() {
            break;
        }
        last = Some(env.step(Action::DontMove).expect("step").1);
    }
    let o = last.expect("at least one step");
    expect(env.steps_taken() == 10_000 && o.done && !o.win, "timeout after 10,000 steps");
    expect(close(o.rewards.r_total, -0.5 * 0.08 * time.t_idle, 1e-12), "timeout step rewarded as normal");
    fails
}

fn conformance() -> Check {
    let fails = conformance_failures();
    if fails.is_empty() {
        (true, "all action cases, both win conditions, and the 10,000-step timeout".into())
    } else {
        (false, fails.join("; "))
    }
}

/// Trained mini-scale agents and their evaluation traces, shared by the
/// extended criteria.
pub struct MiniRuns {
    pub a: MiniRun,
    pub a_wn: MiniRun,
    pub b: MiniRun,
    /// Random policy on Agent A's evaluation scenes.
    pub random: Vec<EpisodeTrace>,
    /// Report files of two identical train, eval, report pipelines.
    pub reports: [Vec<(String, Vec<u8>)>; 2],
}

pub struct MiniRun {
    pub config: ExperimentConfig,
    pub traces: Vec<EpisodeTrace>,
}

fn train_and_evaluate(name: &str, log: &mut dyn FnMut(&str)) -> Result<MiniRun, harness::HarnessError> {
    let config = preset(name)?;
    let start = Instant::now();
    let ckpt = harness::train(&config, |s| {
        if (s.episode + 1) % 50 == 0 {
            log(&format!("{name}: episode {} ({:.0} s)", s.episode + 1, start.elapsed().as_secs_f64()));
        }
    })?;
    let traces = harness::evaluate(&config, &PolicySpec::Network(ckpt.online), None)?;
    Ok(MiniRun { config, traces })
}

/// One complete pipeline through the file system; returns the report files.
fn pipeline(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, harness::HarnessError> {
    let config = preset("mini_agent_a")?;
    let ckpt = harness::run_train(&config, &dir.join("train"), |_| {})?;
    let agent = harness::run_eval(&config, &PolicySpec::Network(ckpt.online), None, &dir.join("eval_agent"))?;
    let random = harness::run_eval(&config, &PolicySpec::Random, None, &dir.join("eval_random"))?;
    let horizon = config.evaluation.time_budget as usize;
    let report = dir.join("report");
    harness::run_report(&[("agent".into(), agent), ("random".into(), random)], horizon, &report)?;
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&report)?
        .map(|e| {
            let p = e?.path();
            Ok((p.file_name().unwrap_or_default().to_string_lossy().into_owned(), std::fs::read(&p)?))
        })
        .collect::<Result<_, std::io::Error>>()?;
    files.sort();
    Ok(files)
}

impl MiniRuns {
    /// Trains the three mini agents, evaluates them, and runs the file-based
    /// pipeline twice under `scratch`. Takes a while; `log` gets progress.
    pub fn collect(scratch: &Path, log: &mut dyn FnMut(&str)) -> Result<Self, harness::HarnessError> {
        let a = train_and_evaluate("mini_agent_a", log)?;
        let random = harness::evaluate(&a.config, &PolicySpec::Random, None)?;
        let a_wn = train_and_evaluate("mini_agent_a_wn_0.6", log)?;
        let b = train_and_evaluate("mini_agent_b", log)?;
        log("pipeline run 1");
        let first = pipeline(&scratch.join("run1"))?;
        log("pipeline run 2");
        let second = pipeline(&scratch.join("run2"))?;
        Ok(Self { a, a_wn, b, random, reports: [first, second] })
    }
}

/// One-sided paired t-test of `x > y`: (mean difference, t, p).
pub fn paired_t_test(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        let p = if mean > 0.0 { 0.0 } else { 1.0 };
        return (mean, if mean > 0.0 { f64::INFINITY } else { 0.0 }, p);
    }
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("n >= 2");
    (mean, t, 1.0 - dist.cdf(t))
}

fn per_trace_auc(traces: &[EpisodeTrace], horizon: usize) -> Vec<f64> {
    traces
        .iter()
        .map(|t| bin_performance(std::slice::from_ref(t), horizon).map(|c| c.auc()).unwrap_or(0.0))
        .collect()
}

/// Runs one extended criterion on collected runs.
pub fn run_extended(id: u8, runs: &MiniRuns) -> CriterionResult {
    timed(id, || match id {
        8 => {
            let horizon = runs.a.config.evaluation.time_budget as usize;
            let agent = per_trace_auc(&runs.a.traces, horizon);
            let random = per_trace_auc(&runs.random, horizon);
            let (diff, t, p) = paired_t_test(&agent, &random);
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            (
                diff > 0.0 && p < 0.05,
                format!(
                    "AUC agent {:.4} vs random {:.4} on {} scenes, t = {t:.2}, one-sided p = {p:.4}",
                    mean(&agent),
                    mean(&random),
                    agent.len()
                ),
            )
        }
        9 => {
            let frac = |r: &MiniRun| interaction_fraction(&r.traces).unwrap_or(f64::NAN);
            let itb = |r: &MiniRun| summarize_window(&r.traces, "full", None).ok().and_then(|w| w.itb_user);
            let (f0, f6) = (frac(&runs.a), frac(&runs.a_wn));
            let (i0, i6) = (itb(&runs.a), itb(&runs.a_wn));
            let show = |v: Option<f64>| v.map_or("undefined".to_string(), |v| format!("{v:.4}"));
            let itb_ok = matches!((i0, i6), (Some(a), Some(b)) if b > a);
            (
                f6 < f0 && itb_ok,
                format!(
                    "interaction fraction {f0:.3} (w_n=0) vs {f6:.3} (w_n=0.6); AP gain per interaction {} vs {}",
                    show(i0),
                    show(i6)
                ),
            )
        }
        10 => {
            let dist = |r: &MiniRun| action_distribution(&r.traces).ok();
            match (dist(&runs.a), dist(&runs.b)) {
                (Some(a), Some(b)) => (
                    b.moving() > a.moving(),
                    format!(
                        "steps that change position: Agent A {:.3}, Agent B {:.3} (action ids 2-5 incl. refused moves: A {:.3}, B {:.3})",
                        a.moving(),
                        b.moving(),
                        a.motion,
                        b.motion
                    ),
                ),
                _ => (false, "no action-steps in the traces".into()),
            }
        }
        11 => {
            let [first, second] = &runs.reports;
            let same = first == second && !first.is_empty();
            let bytes: usize = first.iter().map(|(_, b)| b.len()).sum();
            (same, format!("{} report files, {bytes} bytes, identical: {same}", first.len()))
        }
        _ => (false, format!("criterion {id} is not an extended criterion")),
    })
}
