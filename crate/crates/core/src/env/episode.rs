use super::{
    elapsed_time, encode_observation, reward_components, Action, AgentObservation, EnvConfig, EnvError, EpisodeMode,
    EpisodeTrace, RewardBreakdown, TraceRecord,
};
use crate::orbit::{derive_geometry, DerivedGeometry, GridPosition};
use crate::scene::{generate_scene, render_frame, GroundTruth, Scene, SceneConfig, ViewImage};
use crate::trainee::{evaluate_ap_features, BBox, TraineeState, ViewFeatures};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

/// Source of ground-truth boxes for `RequestUser`.
pub trait Annotator {
    fn annotate(&mut self, view: &ViewImage, truth: &GroundTruth) -> Option<BBox>;
}

/// Always answers with the renderer's ground truth.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactAnnotator;

impl Annotator for ExactAnnotator {
    fn annotate(&mut self, _view: &ViewImage, truth: &GroundTruth) -> Option<BBox> {
        truth.bbox
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub rewards: RewardBreakdown,
    pub t_i: f64,
    pub ap: f64,
    pub done: bool,
    pub win: bool,
    pub u_i: u8,
    /// A training round ran during this step.
    pub trained: bool,
    /// The user was asked but the subject was not visible.
    pub annotation_missing: bool,
    pub tracker_initialized: bool,
}

struct CachedView {
    image: ViewImage,
    truth: GroundTruth,
    features: ViewFeatures,
}

/// One episode of the curiosity game over a pre-rendered exploration space.
pub struct EpisodeEnv {
    config: EnvConfig,
    scene_config: SceneConfig,
    geom: DerivedGeometry,
    annotator: Box<dyn Annotator + Send>,
    scene: Option<Scene>,
    views: Vec<CachedView>,
    eval_views: Vec<usize>,
    trainee: TraineeState,
    pos: GridPosition,
    b_track: Option<BBox>,
    t_elapsed: f64,
    step: u64,
    ap: f64,
    initial_ap: f64,
    ap_stale: bool,
    done: bool,
    episode_id: u64,
    training_rounds: u64,
    injected_ap: VecDeque<f64>,
    trace: EpisodeTrace,
}

impl EpisodeEnv {
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        Self::with_annotator(config, Box::new(ExactAnnotator))
    }

    pub fn with_annotator(config: EnvConfig, annotator: Box<dyn Annotator + Send>) -> Result<Self, EnvError> {
        config.validate()?;
        let geom = derive_geometry(config.orbit)?;
        let mut scene_config = config.scene.clone();
        scene_config.flight_height = geom.height;
        scene_config.orbit_radius = geom.r_max;
        let trainee = TraineeState::new(config.detector.clone(), config.tracker.clone())?;
        Ok(Self {
            scene_config,
            geom,
            annotator,
            scene: None,
            views: Vec::new(),
            eval_views: Vec::new(),
            trainee,
            pos: geom.start_position(),
            b_track: None,
            t_elapsed: 0.0,
            step: 0,
            ap: 0.0,
            initial_ap: 0.0,
            ap_stale: false,
            done: true,
            episode_id: 0,
            training_rounds: 0,
            injected_ap: VecDeque::new(),
            trace: EpisodeTrace::default(),
            config,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn geometry(&self) -> &DerivedGeometry {
        &self.geom
    }

    pub fn scene(&self) -> Option<&Scene> {
        self.scene.as_ref()
    }

    pub fn position(&self) -> GridPosition {
        self.pos
    }

    pub fn trainee(&self) -> &TraineeState {
        &self.trainee
    }

    pub fn tracked_box(&self) -> Option<BBox> {
        self.b_track
    }

    pub fn t_elapsed(&self) -> f64 {
        self.t_elapsed
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn training_rounds(&self) -> u64 {
        self.training_rounds
    }

    pub fn ap(&self) -> f64 {
        self.ap
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn trace(&self) -> &EpisodeTrace {
        &self.trace
    }

    pub fn take_trace(&mut self) -> EpisodeTrace {
        std::mem::take(&mut self.trace)
    }

    /// Views used for AP: the subsample in training mode, all of them in
    /// evaluation mode.
    pub fn eval_view_indices(&self) -> &[usize] {
        &self.eval_views
    }

    pub fn view(&self, pos: GridPosition) -> (&ViewImage, &GroundTruth) {
        let v = &self.views[self.geom.index_of(pos)];
        (&v.image, &v.truth)
    }

    /// Queues AP values that replace the next AP evaluations. Used to drive
    /// the termination logic with synthetic performance curves.
    pub fn inject_ap(&mut self, values: impl IntoIterator<Item = f64>) {
        self.injected_ap.extend(values);
    }

    /// Starts an episode on the scene generated from `scene_seed`.
    pub fn reset(&mut self, scene_seed: u64) -> Result<AgentObservation, EnvError> {
        self.reset_with_id(scene_seed, scene_seed)
    }

    pub fn reset_with_id(&mut self, scene_seed: u64, episode_id: u64) -> Result<AgentObservation, EnvError> {
        let scene = generate_scene(&self.scene_config, scene_seed)?;
        let grid = self.config.detector.grid_size;
        self.views = self
            .geom
            .positions()
            .map(|p| {
                let pose = self.geom.camera_pose(p, scene.aim_point());
                let (image, truth) = render_frame(&scene, &pose, &self.scene_config);
                let features = ViewFeatures::new(&image, grid);
                CachedView { image, truth, features }
            })
            .collect();
        self.scene = Some(scene);

        let n = self.views.len();
        self.eval_views = match self.config.episode.mode {
            EpisodeMode::Train => {
                let mut rng = ChaCha8Rng::seed_from_u64(scene_seed ^ 0x5eed_5a3b_1e00_0000);
                let mut idx = sample(&mut rng, n, self.config.episode.subsample_size.min(n)).into_vec();
                idx.sort_unstable();
                idx
            }
            EpisodeMode::Eval => (0..n).collect(),
        };

        self.trainee = TraineeState::new(self.config.detector.clone(), self.config.tracker.clone())?;
        self.pos = self.geom.start_position();
        self.b_track = None;
        self.t_elapsed = 0.0;
        self.step = 0;
        self.done = false;
        self.episode_id = episode_id;
        self.training_rounds = 0;
        self.ap_stale = false;
        self.ap = self.measure_ap()?;
        self.initial_ap = self.ap;
        self.trace = EpisodeTrace::default();
        self.trace.records.push(TraceRecord {
            episode_id,
            step: 0,
            action_id: None,
            t_i: 0.0,
            t_elapsed: 0.0,
            u_i: 0,
            ap: self.ap,
            r_total: 0.0,
            r_learn: 0.0,
            r_behave: 0.0,
            r_time: 0.0,
            k: self.pos.orbit,
            j: self.pos.angle,
            win: false,
            done: false,
        });
        Ok(self.observe())
    }

    fn measure_ap(&mut self) -> Result<f64, EnvError> {
        if let Some(v) = self.injected_ap.pop_front() {
            return Ok(v);
        }
        let views: Vec<(&ViewFeatures, Option<BBox>)> =
            self.eval_views.iter().map(|&i| (&self.views[i].features, self.views[i].truth.bbox)).collect();
        Ok(evaluate_ap_features(&self.trainee.detector, &views)?)
    }

    pub fn observe(&self) -> AgentObservation {
        let v = &self.views[self.geom.index_of(self.pos)];
        let detections = self.trainee.detector.detect_features(&v.features);
        encode_observation(&v.image, self.b_track.as_ref(), &detections, self.pos, &self.geom)
    }

    fn train_on(&mut self, view_idx: usize, bbox: &BBox) -> Result<(), EnvError> {
        let features = &self.views[view_idx].features;
        self.trainee.detector = self.trainee.detector.training_round_features(features, Some(bbox))?;
        self.training_rounds += 1;
        Ok(())
    }

    /// Executes one action-step.
    pub fn step(&mut self, action: Action) -> Result<(AgentObservation, StepOutcome), EnvError> {
        if self.done {
            return Err(EnvError::Finished);
        }
        let pos_before = self.pos;
        let view_idx = self.geom.index_of(pos_before);
        let mut trained = false;
        let mut u_i = 0;
        let mut annotation_missing = false;
        let mut tracker_initialized = false;

        match action {
            Action::RequestUser => {
                u_i = 1;
                let v = &self.views[view_idx];
                self.b_track = self.annotator.annotate(&v.image, &v.truth);
                match self.b_track {
                    Some(gt) => {
                        self.train_on(view_idx, &gt)?;
                        trained = true;
                        let image = &self.views[view_idx].image;
                        tracker_initialized = self.trainee.start_tracking(image, &gt).is_ok();
                    }
                    None => annotation_missing = true,
                }
            }
            _ => {
                if let Some(b) = self.b_track {
                    self.train_on(view_idx, &b)?;
                    trained = true;
                }
            }
        }
        if let Some(mv) = action.movement() {
            self.pos = self.geom.apply_move(self.pos, mv);
        }
        let new_idx = self.geom.index_of(self.pos);
        self.b_track = self.trainee.update_tracker(&self.views[new_idx].image);

        let t_i = elapsed_time(action, pos_before, trained, &self.config.time, &self.geom);
        self.t_elapsed += t_i;
        self.step += 1;

        let previous_ap = self.ap;
        if trained {
            self.ap_stale = true;
        }
        let on_cadence = match self.config.episode.mode {
            EpisodeMode::Train => true,
            EpisodeMode::Eval => self.step % self.config.episode.eval_cadence == 0,
        };
        if (self.ap_stale && on_cadence) || !self.injected_ap.is_empty() {
            self.ap = self.measure_ap()?;
            self.ap_stale = false;
        }
        let delta_ap = self.ap - previous_ap;

        let ep = &self.config.episode;
        let (win, done) = match ep.mode {
            EpisodeMode::Train => {
                let win = self.ap >= ep.win_ap || self.ap - self.initial_ap >= ep.win_gain;
                (win, win || self.step >= ep.max_action_steps)
            }
            EpisodeMode::Eval => (false, self.t_elapsed >= ep.time_budget || self.step >= ep.max_action_steps),
        };
        self.done = done;

        let rewards = reward_components(delta_ap, action, t_i, &self.config.reward, win);

        self.trace.records.push(TraceRecord {
            episode_id: self.episode_id,
            step: self.step,
            action_id: Some(action.id()),
            t_i,
            t_elapsed: self.t_elapsed,
            u_i,
            ap: self.ap,
            r_total: rewards.r_total,
            r_learn: rewards.r_learn,
            r_behave: rewards.r_behave,
            r_time: rewards.r_time,
            k: self.pos.orbit,
            j: self.pos.angle,
            win,
            done,
        });

        let outcome = StepOutcome {
            rewards,
            t_i,
            ap: self.ap,
            done,
            win,
            u_i,
            trained,
            annotation_missing,
            tracker_initialized,
        };
        Ok((self.observe(), outcome))
    }
}
