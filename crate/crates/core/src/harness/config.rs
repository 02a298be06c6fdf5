use super::HarnessError;
use crate::agent::TrainConfig;
use crate::env::{EnvConfig, EpisodeConfig, EpisodeMode, RewardWeights, TimeParams};
use crate::orbit::OrbitSpaceConfig;
use crate::scene::SceneConfig;
use crate::trainee::{DetectorConfig, TrackerConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Settings of the `eval` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub n_scenes: u64,
    /// Simulated seconds per episode.
    pub time_budget: f64,
    pub n_obs_range: (usize, usize),
    /// Index of the first held-out scene.
    pub first_scene: u64,
    /// Exploration rate of a trained policy during evaluation.
    pub epsilon: f64,
    /// Full-space AP is recomputed every this many steps.
    pub eval_cadence: u64,
    /// Seed for the policies' own random draws.
    pub policy_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_scenes: 20,
            time_budget: 300.0,
            n_obs_range: (20, 25),
            first_scene: 0,
            epsilon: 0.05,
            eval_cadence: 1,
            policy_seed: 0,
        }
    }
}

/// One experiment: environment, trainee, agent, and evaluation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub orbit: OrbitSpaceConfig,
    pub scene: SceneConfig,
    pub detector: DetectorConfig,
    pub tracker: TrackerConfig,
    pub time: TimeParams,
    pub reward: RewardWeights,
    pub episode: EpisodeConfig,
    pub agent: TrainConfig,
    pub evaluation: EvalConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "default".into(),
            orbit: OrbitSpaceConfig::default(),
            scene: SceneConfig::default(),
            detector: DetectorConfig::default(),
            tracker: TrackerConfig::default(),
            time: TimeParams::default(),
            reward: RewardWeights::default(),
            episode: EpisodeConfig::default(),
            agent: TrainConfig::default(),
            evaluation: EvalConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Fully resolved configuration, every key spelled out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let cfg = |e: &dyn std::fmt::Display| HarnessError::Config(e.to_string());
        self.train_env_config().validate().map_err(|e| cfg(&e))?;
        self.eval_env_config(None).validate().map_err(|e| cfg(&e))?;
        self.agent.validate().map_err(|e| cfg(&e))?;
        let shape = self.agent.preset.shape();
        if shape.image_size != self.scene.image_size {
            return Err(HarnessError::Config(format!(
                "agent preset expects {}px views but scene.image_size is {}",
                shape.image_size, self.scene.image_size
            )));
        }
        let e = &self.evaluation;
        if e.n_scenes == 0 || !(0.0..=1.0).contains(&e.epsilon) {
            return Err(HarnessError::Config("evaluation needs n_scenes >= 1 and epsilon in [0, 1]".into()));
        }
        Ok(())
    }

    fn env_config(&self, episode: EpisodeConfig) -> EnvConfig {
        EnvConfig {
            orbit: self.orbit,
            scene: self.scene.clone(),
            detector: self.detector.clone(),
            tracker: self.tracker.clone(),
            time: self.time,
            reward: self.reward,
            episode,
        }
    }

    pub fn train_env_config(&self) -> EnvConfig {
        self.env_config(EpisodeConfig { mode: EpisodeMode::Train, ..self.episode.clone() })
    }

    /// Evaluation environment, optionally under another platform's timing.
    pub fn eval_env_config(&self, time: Option<TimeParams>) -> EnvConfig {
        let e = &self.evaluation;
        let mut env = self.env_config(EpisodeConfig {
            mode: EpisodeMode::Eval,
            time_budget: e.time_budget,
            eval_cadence: e.eval_cadence,
            max_action_steps: u64::MAX,
            ..self.episode.clone()
        });
        env.scene.n_obs_range = e.n_obs_range;
        if let Some(t) = time {
            env.time = t;
        }
        env
    }
}

/// Shipped configuration files, by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("agent_a", include_str!("../../../../configs/agent_a.cfg")),
    ("agent_b", include_str!("../../../../configs/agent_b.cfg")),
    ("wn_sweep_0", include_str!("../../../../configs/wn_sweep_0.cfg")),
    ("wn_sweep_0.3", include_str!("../../../../configs/wn_sweep_0.3.cfg")),
    ("wn_sweep_0.6", include_str!("../../../../configs/wn_sweep_0.6.cfg")),
    ("mini_agent_a", include_str!("../../../../configs/mini_agent_a.cfg")),
    ("mini_agent_a_wn_0.6", include_str!("../../../../configs/mini_agent_a_wn_0.6.cfg")),
    ("mini_agent_b", include_str!("../../../../configs/mini_agent_b.cfg")),
];

pub fn preset(name: &str) -> Result<ExperimentConfig, HarnessError> {
    let text = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| HarnessError::Config(format!("no preset named {name:?}")))?;
    ExperimentConfig::from_toml(text)
}

/// A config file path, or the name of a shipped preset.
pub fn resolve(spec: &str) -> Result<ExperimentConfig, HarnessError> {
    let path = Path::new(spec);
    if path.exists() {
        ExperimentConfig::load(path)
    } else if PRESETS.iter().any(|(n, _)| *n == spec) {
        preset(spec)
    } else {
        Err(HarnessError::Io(format!("{spec}: no such config file or preset")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::ScalePreset;

    #[test]
    fn presets_parse_and_validate() {
        for (name, _) in PRESETS {
            let c = preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(c.time.t_click, 0.9, "{name}");
        }
        let a = preset("agent_a").unwrap();
        assert_eq!((a.time.s_a, a.time.t_train), (2.5, 0.305));
        let b = preset("agent_b").unwrap();
        assert_eq!((b.time.s_a, b.time.t_train), (10.0, 2.5));
        let wn: Vec<f64> = ["wn_sweep_0", "wn_sweep_0.3", "wn_sweep_0.6"].iter().map(|n| preset(n).unwrap().reward.w_n).collect();
        assert_eq!(wn, vec![0.0, 0.3, 0.6]);
        let m = preset("mini_agent_a").unwrap();
        assert_eq!(m.agent.preset, ScalePreset::Mini);
        assert_eq!(m.orbit.n_orbits, 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml("[time]\nt_clik = 0.9\n").unwrap_err();
        assert!(matches!(err, HarnessError::Config(_)));
        assert!(matches!(ExperimentConfig::from_toml("bogus = 1\n"), Err(HarnessError::Config(_))));
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = preset("mini_agent_b").unwrap();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn scale_mismatch_is_a_config_error() {
        let text = "[agent]\npreset = \"mini\"\n";
        assert!(matches!(ExperimentConfig::from_toml(text), Err(HarnessError::Config(_))));
    }

    #[test]
    fn eval_env_uses_budget_and_cross_timing() {
        let c = preset("agent_a").unwrap();
        let env = c.eval_env_config(Some(TimeParams::AGENT_B));
        assert_eq!(env.episode.mode, EpisodeMode::Eval);
        assert_eq!(env.episode.time_budget, 300.0);
        assert_eq!(env.scene.n_obs_range, (20, 25));
        assert_eq!(env.time, TimeParams::AGENT_B);
    }
}
