//! Prints one PASS/FAIL line per acceptance criterion and fails if any
//! criterion fails. Criteria 8 to 11 train mini-scale agents and take
//! several minutes on one core.

use curiosity::acceptance::{run_extended, run_quick, MiniRuns, EXTENDED, QUICK};
use std::process::ExitCode;

fn main() -> ExitCode {
    let mut results = Vec::new();
    for id in QUICK {
        let r = run_quick(id);
        println!("{r}");
        results.push(r);
    }
    let scratch = tempfile::tempdir().expect("temp dir");
    match MiniRuns::collect(scratch.path(), &mut |m| eprintln!("  {m}")) {
        Ok(runs) => {
            for id in EXTENDED {
                let r = run_extended(id, &runs);
                println!("{r}");
                results.push(r);
            }
        }
        Err(e) => {
            for id in EXTENDED {
                println!("criterion {id:2} FAIL {}: mini-scale runs failed: {e}", curiosity::acceptance::title(id));
            }
            return ExitCode::FAILURE;
        }
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
