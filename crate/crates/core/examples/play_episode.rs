//! Plays one evaluation episode with a scripted policy (ask once, then
//! train on the tracked box, moving whenever tracking is lost) and with a
//! random policy, and compares their AP over simulated time.
//!
//!     cargo run --release --example play_episode -- [scene_seed]

use curiosity::agent::{run_episode, Policy, RandomPolicy, AgentError};
use curiosity::env::{Action, AgentObservation, EnvConfig, EpisodeEnv, EpisodeMode, TRACK_CHANNEL};
use curiosity::metrics::{bin_performance, interaction_fraction};

/// Asks the user whenever nothing is tracked, stays put while tracking,
/// and takes a step left after every unanswered request.
struct AskThenTrain {
    asked: bool,
}

impl Policy for AskThenTrain {
    fn begin_episode(&mut self) {
        self.asked = false;
    }

    fn act(&mut self, obs: &AgentObservation) -> Result<Action, AgentError> {
        let tracking = obs.matrix.chunks(5).any(|p| p[TRACK_CHANNEL] == 255);
        let a = if tracking {
            Action::DontMove
        } else if self.asked {
            Action::MoveLeft
        } else {
            Action::RequestUser
        };
        self.asked = a == Action::RequestUser;
        Ok(a)
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(11);
    let mut config = EnvConfig::default();
    config.orbit.n_orbits = 3;
    config.orbit.delta_alpha = 30.0;
    config.scene.image_size = 36;
    config.episode.mode = EpisodeMode::Eval;
    config.episode.time_budget = 60.0;
    let mut env = EpisodeEnv::new(config)?;

    let scripted = run_episode(&mut env, &mut AskThenTrain { asked: false }, seed)?;
    let random = run_episode(&mut env, &mut RandomPolicy::new(1), seed)?;
    for (name, trace) in [("scripted", &scripted), ("random", &random)] {
        let curve = bin_performance(std::slice::from_ref(trace), 60)?;
        let last = trace.final_record().expect("non-empty trace");
        println!(
            "{name:9} steps {:4}  final AP {:.3}  AUC {:.4}  interaction fraction {:.3}",
            trace.len() - 1,
            last.ap,
            curve.auc(),
            interaction_fraction(std::slice::from_ref(trace))?
        );
        let samples: Vec<String> = curve.bins.iter().step_by(10).map(|v| format!("{v:.3}")).collect();
        println!("          AP at 0, 10, .. 50 s: {}", samples.join(" "));
    }
    Ok(())
}
