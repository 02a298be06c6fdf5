//! Trains a curiosity agent from a config preset or file and saves the
//! checkpoint.
//!
//!     cargo run --release --example train_agent -- [config] [episodes] [out_dir]

use curiosity::harness::{resolve, run_train, CHECKPOINT_FILE};
use std::path::PathBuf;
use std::time::Instant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let mut cfg = resolve(&args.next().unwrap_or_else(|| "mini_agent_a".into()))?;
    if let Some(n) = args.next() {
        cfg.agent.episodes = n.parse()?;
    }
    let out = PathBuf::from(args.next().unwrap_or_else(|| format!("runs/{}", cfg.name)));

    let start = Instant::now();
    let mut rewards = Vec::new();
    run_train(&cfg, &out, |s| {
        rewards.push(s.total_reward);
        if (s.episode + 1) % 10 == 0 {
            let recent = &rewards[rewards.len().saturating_sub(10)..];
            println!(
                "episode {:4}  mean reward (last 10) {:7.3}  final AP {:.3}  eps {:.3}  {:.0} s",
                s.episode + 1,
                recent.iter().sum::<f64>() / recent.len() as f64,
                s.final_ap,
                s.epsilon,
                start.elapsed().as_secs_f64()
            );
        }
    })?;
    println!("saved {}", out.join(CHECKPOINT_FILE).display());
    Ok(())
}
