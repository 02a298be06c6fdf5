//! The curiosity agent: a recurrent dueling double-Q network trained on
//! replayed episode sequences.

mod checkpoint;
mod learn;
mod net;
mod replay;

pub use checkpoint::AgentCheckpoint;
pub use learn::{gradient_check, greedy, sequence_loss, sequence_loss_grad, td_targets_double_q};
pub use net::{dueling_q, ConvSpec, LstmState, NetInput, Network, NetworkShape, StepCache, N_ACTIONS};
pub use replay::{ReplayBuffer, SequenceRef, StoredEpisode};

use crate::env::{Action, AgentObservation, EnvConfig, EnvError, EpisodeEnv, EpisodeTrace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("network shape: {0}")]
    Shape(String),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalePreset {
    Full,
    Mini,
}

impl ScalePreset {
    pub fn shape(self) -> NetworkShape {
        match self {
            ScalePreset::Full => NetworkShape::full(),
            ScalePreset::Mini => NetworkShape::mini(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub preset: ScalePreset,
    pub gamma: f64,
    pub learning_rate: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Environment steps over which epsilon decays linearly.
    pub epsilon_anneal_steps: u64,
    /// Environment steps between target-network copies.
    pub target_sync_steps: u64,
    /// Replay capacity in transitions.
    pub replay_capacity: usize,
    pub seq_len: usize,
    /// Sequences per update.
    pub batch_size: usize,
    /// Environment steps between updates.
    pub train_every: u64,
    /// Transitions in replay before the first update.
    pub warmup_steps: usize,
    pub episodes: u64,
    pub grad_clip: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            preset: ScalePreset::Full,
            gamma: 0.99,
            learning_rate: 0.01,
            epsilon_start: 1.0,
            epsilon_end: 0.1,
            epsilon_anneal_steps: 50_000,
            target_sync_steps: 2_500,
            replay_capacity: 100_000,
            seq_len: 8,
            batch_size: 8,
            train_every: 4,
            warmup_steps: 1_000,
            episodes: 1_000,
            grad_clip: 10.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::Config(m.into()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return bad("epsilon must lie in [0, 1]");
        }
        if !(self.learning_rate > 0.0) || !(self.grad_clip > 0.0) {
            return bad("learning rate and gradient clip must be positive");
        }
        if self.seq_len == 0 || self.batch_size == 0 || self.train_every == 0 || self.target_sync_steps == 0 {
            return bad("sequence length, batch size, update and sync periods must be positive");
        }
        if self.replay_capacity == 0 {
            return bad("replay capacity must be positive");
        }
        Ok(())
    }

    pub fn epsilon(&self, step: u64) -> f64 {
        if self.epsilon_anneal_steps == 0 {
            return self.epsilon_end;
        }
        if step >= self.epsilon_anneal_steps {
            return self.epsilon_end;
        }
        let frac = step as f64 / self.epsilon_anneal_steps as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

/// Scene seed of training episode `episode` for run seed `seed`. Always
/// below 2^31, so it never collides with [`evaluation_scene_seed`].
pub fn training_scene_seed(seed: u64, episode: u64) -> u64 {
    let mut z = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ episode.wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31)) & 0x7FFF_FFFF
}

/// Held-out scene seed number `i`.
pub fn evaluation_scene_seed(i: u64) -> u64 {
    (1 << 32) + i
}

/// Epsilon-greedy action from `net`. The hidden state advances whichever
/// branch is taken.
pub fn act<R: Rng>(
    net: &Network,
    obs: &AgentObservation,
    hidden: &LstmState,
    epsilon: f64,
    rng: &mut R,
) -> Result<(Action, LstmState), AgentError> {
    let cache = net.forward(&NetInput::from_observation(obs), hidden)?;
    let a = if rng.gen::<f64>() < epsilon { rng.gen_range(0..N_ACTIONS) } else { greedy(&cache.q) };
    Ok((Action::from_id(a).expect("six actions"), cache.state))
}

/// Anything that picks actions during an episode.
pub trait Policy {
    fn begin_episode(&mut self);
    fn act(&mut self, obs: &AgentObservation) -> Result<Action, AgentError>;
}

/// Uniform over the six actions.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Policy for RandomPolicy {
    fn begin_episode(&mut self) {}

    fn act(&mut self, _obs: &AgentObservation) -> Result<Action, AgentError> {
        Ok(Action::from_id(self.rng.gen_range(0..N_ACTIONS)).unwrap())
    }
}

/// A trained network run with a fixed (usually zero) epsilon.
#[derive(Debug, Clone)]
pub struct NetworkPolicy {
    pub net: Network,
    pub epsilon: f64,
    hidden: LstmState,
    rng: ChaCha8Rng,
}

impl NetworkPolicy {
    pub fn new(net: Network, epsilon: f64, seed: u64) -> Self {
        let hidden = net.initial_state();
        Self { net, epsilon, hidden, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Policy for NetworkPolicy {
    fn begin_episode(&mut self) {
        self.hidden = self.net.initial_state();
    }

    fn act(&mut self, obs: &AgentObservation) -> Result<Action, AgentError> {
        let (a, h) = act(&self.net, obs, &self.hidden, self.epsilon, &mut self.rng)?;
        self.hidden = h;
        Ok(a)
    }
}

/// Plays one episode on `env` from `scene_seed` and returns its trace.
pub fn run_episode(env: &mut EpisodeEnv, policy: &mut dyn Policy, scene_seed: u64) -> Result<EpisodeTrace, AgentError> {
    let mut obs = env.reset(scene_seed)?;
    policy.begin_episode();
    while !env.is_done() {
        let a = policy.act(&obs)?;
        obs = env.step(a)?.0;
    }
    Ok(env.take_trace())
}

/// Per-episode summary reported by [`Trainer::train_episode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub episode: u64,
    pub scene_seed: u64,
    pub steps: u64,
    pub total_reward: f64,
    pub final_ap: f64,
    pub win: bool,
    pub t_elapsed: f64,
    pub interactions: u64,
    pub epsilon: f64,
    /// Mean squared-TD loss over the updates of this episode, if any ran.
    pub mean_loss: Option<f64>,
}

pub struct Trainer {
    pub config: TrainConfig,
    pub online: Network,
    pub target: Network,
    pub replay: ReplayBuffer,
    env: EpisodeEnv,
    rng: ChaCha8Rng,
    pub episodes_done: u64,
    pub env_steps: u64,
    pub updates: u64,
}

impl Trainer {
    pub fn new(env_config: EnvConfig, config: TrainConfig) -> Result<Self, AgentError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let online = Network::new(config.preset.shape(), &mut rng)?;
        let target = online.clone();
        Self::assemble(env_config, config, online, target, rng, 0, 0, 0)
    }

    /// Continues from a checkpoint with an empty replay memory.
    pub fn from_checkpoint(env_config: EnvConfig, ckpt: AgentCheckpoint) -> Result<Self, AgentError> {
        let AgentCheckpoint { online, target, config, rng, episodes, env_steps, updates } = ckpt;
        Self::assemble(env_config, config, online, target, rng, episodes, env_steps, updates)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        env_config: EnvConfig,
        config: TrainConfig,
        online: Network,
        target: Network,
        rng: ChaCha8Rng,
        episodes_done: u64,
        env_steps: u64,
        updates: u64,
    ) -> Result<Self, AgentError> {
        config.validate()?;
        if env_config.scene.image_size != online.shape.image_size {
            return Err(AgentError::Shape(format!(
                "environment renders {}px views, network expects {}px",
                env_config.scene.image_size, online.shape.image_size
            )));
        }
        let env = EpisodeEnv::new(env_config)?;
        let replay = ReplayBuffer::new(config.replay_capacity, config.seq_len);
        Ok(Self { config, online, target, replay, env, rng, episodes_done, env_steps, updates })
    }

    pub fn env(&self) -> &EpisodeEnv {
        &self.env
    }

    pub fn checkpoint(&self) -> AgentCheckpoint {
        AgentCheckpoint {
            online: self.online.clone(),
            target: self.target.clone(),
            config: self.config.clone(),
            rng: self.rng.clone(),
            episodes: self.episodes_done,
            env_steps: self.env_steps,
            updates: self.updates,
        }
    }

    /// Runs the next training episode on its scheduled scene.
    pub fn train_episode(&mut self) -> Result<EpisodeStats, AgentError> {
        let scene_seed = training_scene_seed(self.config.seed, self.episodes_done);
        let mut obs = self.env.reset(scene_seed)?;
        let mut hidden = self.online.initial_state();
        let mut stored = StoredEpisode::new(obs.clone());
        let (mut total_reward, mut losses, mut n_loss) = (0.0, 0.0, 0u64);
        let mut epsilon;
        loop {
            epsilon = self.config.epsilon(self.env_steps);
            let (action, h) = act(&self.online, &obs, &hidden, epsilon, &mut self.rng)?;
            hidden = h;
            let (next, out) = self.env.step(action)?;
            total_reward += out.rewards.r_total;
            stored.push(action.id() as usize, out.rewards.r_total, out.win, next.clone());
            obs = next;
            self.env_steps += 1;
            if self.env_steps % self.config.target_sync_steps == 0 {
                self.target = self.online.clone();
            }
            if self.replay.len() >= self.config.warmup_steps.max(1) && self.env_steps % self.config.train_every == 0 {
                losses += self.learn_step();
                n_loss += 1;
            }
            if out.done {
                break;
            }
        }
        let trace = self.env.trace();
        let last = trace.final_record().expect("episode has records");
        let stats = EpisodeStats {
            episode: self.episodes_done,
            scene_seed,
            steps: stored.len() as u64,
            total_reward,
            final_ap: last.ap,
            win: last.win,
            t_elapsed: last.t_elapsed,
            interactions: trace.interactions(),
            epsilon,
            mean_loss: (n_loss > 0).then(|| losses / n_loss as f64),
        };
        self.replay.push(stored);
        self.episodes_done += 1;
        Ok(stats)
    }

    /// Runs the remaining configured episodes, reporting each to `on_episode`.
    pub fn train(&mut self, mut on_episode: impl FnMut(&EpisodeStats, &Trainer)) -> Result<(), AgentError> {
        while self.episodes_done < self.config.episodes {
            let stats = self.train_episode()?;
            on_episode(&stats, self);
        }
        Ok(())
    }

    /// One clipped SGD step on a batch of replayed sequences. Returns the
    /// mean per-transition loss.
    pub fn learn_step(&mut self) -> f64 {
        let mut grad = vec![0.0; self.online.param_count()];
        let (mut loss, mut count) = (0.0, 0usize);
        for _ in 0..self.config.batch_size {
            let s = self.replay.sample(&mut self.rng).expect("replay is warm");
            let ep = self.replay.episode(s.episode);
            let inputs: Vec<NetInput> =
                ep.observations[s.start..=s.start + s.len].iter().map(NetInput::from_observation).collect();
            let zero = self.online.initial_state();
            let online = self.online.forward_sequence(&inputs, &zero).expect("replayed inputs match");
            let target = self.target.forward_sequence(&inputs, &zero).expect("replayed inputs match");
            let q_online: Vec<[f64; N_ACTIONS]> = online[1..].iter().map(|c| c.q).collect();
            let q_target: Vec<[f64; N_ACTIONS]> = target[1..].iter().map(|c| c.q).collect();
            let range = s.start..s.start + s.len;
            let y = td_targets_double_q(
                &ep.rewards[range.clone()],
                &ep.terminals[range.clone()],
                &q_online,
                &q_target,
                self.config.gamma,
            );
            let actions = &ep.actions[range];
            let dq: Vec<[f64; N_ACTIONS]> = (0..s.len)
                .map(|t| {
                    let e = online[t].q[actions[t]] - y[t];
                    loss += 0.5 * e * e;
                    let mut d = [0.0; N_ACTIONS];
                    d[actions[t]] = e;
                    d
                })
                .collect();
            self.online.backward_sequence(&inputs, &online, &dq, &mut grad);
            count += s.len;
        }
        let scale = 1.0 / count as f64;
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt() * scale;
        let clip = if norm > self.config.grad_clip { self.config.grad_clip / norm } else { 1.0 };
        let step = self.config.learning_rate * scale * clip;
        for (p, g) in self.online.params.iter_mut().zip(&grad) {
            *p -= step * g;
        }
        self.updates += 1;
        loss * scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_schedule_endpoints() {
        let c = TrainConfig { epsilon_anneal_steps: 100, ..TrainConfig::default() };
        assert_eq!(c.epsilon(0), 1.0);
        assert!((c.epsilon(50) - 0.55).abs() < 1e-12);
        assert_eq!(c.epsilon(100), 0.1);
        assert_eq!(c.epsilon(10_000), 0.1);
    }

    #[test]
    fn training_and_evaluation_seeds_are_disjoint() {
        for s in 0..5 {
            for e in 0..1000 {
                assert!(training_scene_seed(s, e) < evaluation_scene_seed(0));
            }
        }
    }

    #[test]
    fn uniform_exploration() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = Network::new(NetworkShape::mini(), &mut rng).unwrap();
        let obs = AgentObservation { size: 36, matrix: vec![100; 36 * 36 * 5], position: (0.5, 0.5) };
        let mut counts = [0usize; N_ACTIONS];
        let h = net.initial_state();
        for _ in 0..10_000 {
            counts[act(&net, &obs, &h, 1.0, &mut rng).unwrap().0.id() as usize] += 1;
        }
        let (n, p) = (10_000.0, 1.0 / 6.0);
        let sigma = (n * p * (1.0 - p)) as f64;
        for c in counts {
            assert!((c as f64 - n * p).abs() < 3.0 * sigma.sqrt(), "{counts:?}");
        }
    }
}
