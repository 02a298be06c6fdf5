//! Per-step trace records, stored as JSON Lines.

use serde::{Deserialize, Serialize};
use std::io::{self, BufRead, Write};

/// One line of a trace file. Step 0 is the reset record: it carries the
/// fresh trainee's AP and has no action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub episode_id: u64,
    pub step: u64,
    pub action_id: Option<u8>,
    pub t_i: f64,
    pub t_elapsed: f64,
    pub u_i: u8,
    pub ap: f64,
    pub r_total: f64,
    pub r_learn: f64,
    pub r_behave: f64,
    pub r_time: f64,
    pub k: usize,
    pub j: usize,
    pub win: bool,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeTrace {
    pub records: Vec<TraceRecord>,
}

impl EpisodeTrace {
    /// Number of action-steps (the reset record excluded).
    pub fn len(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Performance after step `i`; `i = 0` is the untrained trainee.
    pub fn performance(&self, i: usize) -> f64 {
        self.records[i].ap
    }

    pub fn initial_ap(&self) -> f64 {
        self.records.first().map_or(0.0, |r| r.ap)
    }

    pub fn final_record(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn interactions(&self) -> u64 {
        self.records.iter().map(|r| r.u_i as u64).sum()
    }

    /// Action-step records only.
    pub fn steps(&self) -> &[TraceRecord] {
        self.records.get(1..).unwrap_or(&[])
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> io::Result<Self> {
        let mut records = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?);
        }
        Ok(Self { records })
    }
}
