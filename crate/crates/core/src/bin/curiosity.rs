use clap::{Parser, Subcommand};
use curiosity::acceptance::{self, MiniRuns, EXTENDED, QUICK};
use curiosity::harness::{self, resolve, HarnessError, PolicySpec};
use curiosity::orbit::GridPosition;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "curiosity", version, about = "Train and evaluate drone curiosity agents in simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent; writes checkpoint.bin, train_log.csv and config.cfg.
    Train {
        /// Config file or preset name.
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        episodes: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a policy on held-out scenes; writes one JSON Lines trace per scene.
    Eval {
        #[arg(long)]
        config: String,
        /// Checkpoint path, or "random".
        #[arg(long)]
        policy: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        scenes: Option<u64>,
        /// Evaluate under the timing of another config (cross-platform runs).
        #[arg(long)]
        time_from: Option<String>,
    },
    /// Summarize trace directories into CSV reports.
    Report {
        /// Strategy traces as name=directory; repeatable.
        #[arg(long = "traces", value_name = "NAME=DIR", required = true)]
        traces: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Curve horizon in seconds.
        #[arg(long, default_value_t = 300)]
        horizon: usize,
    },
    /// Dump rendered views of a scene as PPM images.
    RenderScene {
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Orbit (1 = innermost); with --angle, renders a single view.
        #[arg(long, requires = "angle")]
        orbit: Option<usize>,
        #[arg(long, requires = "orbit")]
        angle: Option<usize>,
    },
    /// Run the acceptance checks.
    Selftest {
        /// Also train mini-scale agents for the directional checks.
        #[arg(long)]
        extended: bool,
        /// Working directory for the extended tier (default: under the system temp dir).
        #[arg(long)]
        scratch: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Train { config, out, episodes, seed } => {
            let mut cfg = resolve(&config)?;
            if let Some(n) = episodes {
                cfg.agent.episodes = n;
            }
            if let Some(s) = seed {
                cfg.agent.seed = s;
            }
            cfg.validate()?;
            harness::run_train(&cfg, &out, |s| {
                if (s.episode + 1) % 10 == 0 {
                    eprintln!(
                        "episode {:5}  steps {:5}  reward {:8.3}  ap {:.3}  win {}  eps {:.3}",
                        s.episode + 1,
                        s.steps,
                        s.total_reward,
                        s.final_ap,
                        s.win,
                        s.epsilon
                    );
                }
            })?;
            println!("checkpoint written to {}", out.join(harness::CHECKPOINT_FILE).display());
        }
        Command::Eval { config, policy, out, scenes, time_from } => {
            let mut cfg = resolve(&config)?;
            if let Some(n) = scenes {
                cfg.evaluation.n_scenes = n;
            }
            cfg.validate()?;
            let time = time_from.map(|t| resolve(&t).map(|c| c.time)).transpose()?;
            let traces = harness::run_eval(&cfg, &PolicySpec::parse(&policy)?, time, &out)?;
            println!("{} traces written to {}", traces.len(), out.display());
        }
        Command::Report { traces, out, horizon } => {
            let mut strategies = Vec::new();
            for spec in traces {
                let (name, dir) = spec
                    .split_once('=')
                    .ok_or_else(|| HarnessError::Config(format!("--traces expects NAME=DIR, got {spec:?}")))?;
                strategies.push((name.to_string(), harness::read_traces(&PathBuf::from(dir))?));
            }
            harness::run_report(&strategies, horizon, &out)?;
            println!("report written to {}", out.display());
        }
        Command::RenderScene { config, seed, out, orbit, angle } => {
            let cfg = resolve(&config)?;
            let position = orbit.zip(angle).map(|(k, j)| GridPosition::new(k, j));
            let written = harness::render_scene(&cfg, seed, position, &out)?;
            println!("{} views written to {}", written.len(), out.display());
        }
        Command::Selftest { extended, scratch } => selftest(extended, scratch)?,
    }
    Ok(())
}

fn selftest(extended: bool, scratch: Option<PathBuf>) -> Result<(), HarnessError> {
    let mut failed = Vec::new();
    for id in QUICK {
        let r = acceptance::run_quick(id);
        println!("{r}");
        if !r.passed {
            failed.push(id);
        }
    }
    if extended {
        let dir = scratch.unwrap_or_else(|| std::env::temp_dir().join(format!("curiosity-selftest-{}", std::process::id())));
        let runs = MiniRuns::collect(&dir, &mut |m| eprintln!("{m}"))?;
        for id in EXTENDED {
            let r = acceptance::run_extended(id, &runs);
            println!("{r}");
            if !r.passed {
                failed.push(id);
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::Acceptance(format!("criteria {failed:?} failed")))
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
