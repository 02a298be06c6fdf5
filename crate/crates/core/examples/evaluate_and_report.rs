//! Evaluates a checkpoint and the random baseline on the same held-out
//! scenes, writes traces and CSV reports, and prints a short comparison.
//!
//!     cargo run --release --example evaluate_and_report -- <checkpoint> [config] [out_dir]

use curiosity::harness::{resolve, run_eval, run_report, PolicySpec};
use curiosity::metrics::{action_distribution, bin_performance, interaction_fraction};
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let ckpt = args.next().ok_or("usage: evaluate_and_report <checkpoint> [config] [out_dir]")?;
    let cfg = resolve(&args.next().unwrap_or_else(|| "mini_agent_a".into()))?;
    let out = PathBuf::from(args.next().unwrap_or_else(|| "eval_report".into()));

    let agent = run_eval(&cfg, &PolicySpec::parse(&ckpt)?, None, &out.join("agent"))?;
    let random = run_eval(&cfg, &PolicySpec::Random, None, &out.join("random"))?;
    let horizon = cfg.evaluation.time_budget as usize;
    run_report(&[("agent".into(), agent.clone()), ("random".into(), random.clone())], horizon, &out.join("report"))?;

    for (name, traces) in [("agent", &agent), ("random", &random)] {
        let d = action_distribution(traces)?;
        println!(
            "{name:6}  AUC {:.4}  DontMove {:.3}  RequestUser {:.3}  Motion {:.3}  interactions {:.3}",
            bin_performance(traces, horizon)?.auc(),
            d.dont_move,
            d.request_user,
            d.motion,
            interaction_fraction(traces)?
        );
    }
    println!("reports in {}", out.join("report").display());
    Ok(())
}
