//! The game the curiosity agent plays: one scene, one trainee, six actions,
//! simulated time, and a weighted reward.

mod action;
mod episode;
mod observation;
mod reward;
mod trace;

pub use action::Action;
pub use episode::{Annotator, EpisodeEnv, ExactAnnotator, StepOutcome};
pub use observation::{encode_observation, AgentObservation, CHANNELS, DETECTION_CHANNEL, TRACK_CHANNEL};
pub use reward::{elapsed_time, reward_components, RewardBreakdown, RewardWeights, TimeParams};
pub use trace::{EpisodeTrace, TraceRecord};

use crate::orbit::{OrbitError, OrbitSpaceConfig};
use crate::scene::{SceneConfig, SceneError};
use crate::trainee::{DetectorConfig, TraineeError, TrackerConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("episode already finished")]
    Finished,
    #[error("invalid environment config: {0}")]
    Config(String),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Trainee(#[from] TraineeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeMode {
    /// Terminates on a win or after `max_action_steps`; AP on a fixed subsample.
    Train,
    /// Terminates when the time budget is spent; AP over every view.
    Eval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeConfig {
    pub max_action_steps: u64,
    /// Absolute AP win threshold.
    pub win_ap: f64,
    /// AP gain over the fresh trainee that also counts as a win.
    pub win_gain: f64,
    /// Views in the training-mode AP subsample.
    pub subsample_size: usize,
    pub mode: EpisodeMode,
    /// Simulated seconds per evaluation episode.
    pub time_budget: f64,
    /// Evaluation mode recomputes full-space AP every this many steps.
    pub eval_cadence: u64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            max_action_steps: 10_000,
            win_ap: 0.85,
            win_gain: 0.70,
            subsample_size: 30,
            mode: EpisodeMode::Train,
            time_budget: 300.0,
            eval_cadence: 1,
        }
    }
}

/// Everything needed to build an [`EpisodeEnv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub orbit: OrbitSpaceConfig,
    pub scene: SceneConfig,
    pub detector: DetectorConfig,
    pub tracker: TrackerConfig,
    pub time: TimeParams,
    pub reward: RewardWeights,
    pub episode: EpisodeConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            orbit: OrbitSpaceConfig::default(),
            scene: SceneConfig::default(),
            detector: DetectorConfig::default(),
            tracker: TrackerConfig::default(),
            time: TimeParams::default(),
            reward: RewardWeights::default(),
            episode: EpisodeConfig::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        let geom = crate::orbit::derive_geometry(self.orbit)?;
        let mut scene = self.scene.clone();
        scene.flight_height = geom.height;
        scene.orbit_radius = geom.r_max;
        scene.validate()?;
        self.detector.validate()?;
        if !self.time.is_valid() {
            return Err(EnvError::Config("time parameters must be positive".into()));
        }
        if !self.reward.is_valid() {
            return Err(EnvError::Config("reward weights must lie in [0, 1] and c_t >= 0".into()));
        }
        let e = &self.episode;
        if e.max_action_steps == 0 || e.subsample_size == 0 || !(e.time_budget > 0.0) || e.eval_cadence == 0 {
            return Err(EnvError::Config("episode limits must be positive".into()));
        }
        if !(self.tracker.confidence_threshold > 0.0 && self.tracker.confidence_threshold <= 1.0)
            || self.tracker.template_size < 2
            || !(self.tracker.margin >= 0.0)
        {
            return Err(EnvError::Config("tracker threshold in (0, 1], template >= 2, margin >= 0".into()));
        }
        Ok(())
    }
}
