//! Figures of merit computed from episode traces.

use crate::env::{Action, EpisodeTrace};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("index range {i}..{j} outside a trace of {len} records")]
    Range { i: usize, j: usize, len: usize },
    #[error("zero elapsed time between records")]
    ZeroInterval,
    #[error("no traces given")]
    Empty,
    #[error("horizon must be at least one second")]
    Horizon,
}

fn check(trace: &EpisodeTrace, i: usize, j: usize) -> Result<(), MetricsError> {
    if i >= j || j >= trace.records.len() {
        return Err(MetricsError::Range { i, j, len: trace.records.len() });
    }
    Ok(())
}

/// Performance gain per user interaction between records `i` and `j`,
/// counting interactions of records `i..=j`. `None` without interactions.
pub fn itb_user(trace: &EpisodeTrace, i: usize, j: usize) -> Result<Option<f64>, MetricsError> {
    check(trace, i, j)?;
    let u: u64 = trace.records[i..=j].iter().map(|r| r.u_i as u64).sum();
    if u == 0 {
        return Ok(None);
    }
    Ok(Some((trace.performance(j) - trace.performance(i)) / u as f64))
}

/// Performance gain per simulated second between records `i` and `j`.
pub fn itb_time(trace: &EpisodeTrace, i: usize, j: usize) -> Result<f64, MetricsError> {
    check(trace, i, j)?;
    let dt = trace.records[j].t_elapsed - trace.records[i].t_elapsed;
    if !(dt > 0.0) {
        return Err(MetricsError::ZeroInterval);
    }
    Ok((trace.performance(j) - trace.performance(i)) / dt)
}

/// Index of the last record with `t_elapsed <= seconds` (0 if none).
pub fn last_index_within(trace: &EpisodeTrace, seconds: f64) -> usize {
    trace.records.iter().rposition(|r| r.t_elapsed <= seconds).unwrap_or(0)
}

/// Mean performance per one-second bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedCurve {
    pub bins: Vec<f64>,
}

impl BinnedCurve {
    pub fn horizon(&self) -> usize {
        self.bins.len()
    }

    /// Area under the curve normalized by the horizon: the mean bin value.
    pub fn auc(&self) -> f64 {
        self.bins.iter().sum::<f64>() / self.bins.len() as f64
    }
}

/// Each action-step's AP goes to bin `floor(t_elapsed)`; bins average over
/// every step of every trace; an empty bin repeats its predecessor, and an
/// empty bin 0 takes the mean initial AP.
pub fn bin_performance(traces: &[EpisodeTrace], horizon_seconds: usize) -> Result<BinnedCurve, MetricsError> {
    if traces.is_empty() {
        return Err(MetricsError::Empty);
    }
    if horizon_seconds == 0 {
        return Err(MetricsError::Horizon);
    }
    let mut sum = vec![0.0; horizon_seconds];
    let mut count = vec![0usize; horizon_seconds];
    for t in traces {
        for r in t.steps() {
            let b = r.t_elapsed.floor();
            if b >= 0.0 && (b as usize) < horizon_seconds {
                sum[b as usize] += r.ap;
                count[b as usize] += 1;
            }
        }
    }
    let initial = traces.iter().map(|t| t.initial_ap()).sum::<f64>() / traces.len() as f64;
    let mut bins = Vec::with_capacity(horizon_seconds);
    let mut last = initial;
    for (s, c) in sum.iter().zip(&count) {
        if *c > 0 {
            last = s / *c as f64;
        }
        bins.push(last);
    }
    Ok(BinnedCurve { bins })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionDistribution {
    pub dont_move: f64,
    pub request_user: f64,
    /// Action ids 2 to 5, whether or not the drone actually moved.
    pub motion: f64,
    /// Motion actions refused at the innermost or outermost orbit. The part
    /// of `motion` that left the drone where it was.
    pub blocked_motion: f64,
}

impl ActionDistribution {
    pub fn rows(&self) -> [(&'static str, f64); 3] {
        [("DontMove", self.dont_move), ("RequestUser", self.request_user), ("Motion", self.motion)]
    }

    /// Fraction of steps on which the drone changed position.
    pub fn moving(&self) -> f64 {
        self.motion - self.blocked_motion
    }
}

pub fn action_distribution(traces: &[EpisodeTrace]) -> Result<ActionDistribution, MetricsError> {
    let mut counts = [0usize; 3];
    let mut blocked = 0usize;
    for pair in traces.iter().flat_map(|t| t.records.windows(2)) {
        let (prev, r) = (&pair[0], &pair[1]);
        match r.action_id.and_then(|a| Action::from_id(a as usize)) {
            Some(Action::DontMove) => counts[0] += 1,
            Some(Action::RequestUser) => counts[1] += 1,
            Some(_) => {
                counts[2] += 1;
                if (prev.k, prev.j) == (r.k, r.j) {
                    blocked += 1;
                }
            }
            None => {}
        }
    }
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(MetricsError::Empty);
    }
    let f = |c: usize| c as f64 / n as f64;
    Ok(ActionDistribution {
        dont_move: f(counts[0]),
        request_user: f(counts[1]),
        motion: f(counts[2]),
        blocked_motion: f(blocked),
    })
}

/// Interactions per action-step, pooled over traces.
pub fn interaction_fraction(traces: &[EpisodeTrace]) -> Result<f64, MetricsError> {
    let steps: usize = traces.iter().map(|t| t.len()).sum();
    if steps == 0 {
        return Err(MetricsError::Empty);
    }
    Ok(traces.iter().map(|t| t.interactions()).sum::<u64>() as f64 / steps as f64)
}

/// ITB summary of one strategy over one time window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub window: String,
    /// Mean over traces of the per-trace gain per second.
    pub itb_time: f64,
    /// Total gain over total interactions, pooled over traces; `None` when
    /// no trace asked the user.
    pub itb_user: Option<f64>,
}

/// Summarizes traces over `[0, seconds]`, or the whole trace for `None`.
pub fn summarize_window(traces: &[EpisodeTrace], name: &str, seconds: Option<f64>) -> Result<WindowSummary, MetricsError> {
    if traces.is_empty() {
        return Err(MetricsError::Empty);
    }
    let (mut time_sum, mut n_time, mut gain, mut interactions) = (0.0, 0usize, 0.0, 0u64);
    for t in traces {
        let j = match seconds {
            Some(s) => last_index_within(t, s),
            None => t.records.len().saturating_sub(1),
        };
        if j == 0 {
            continue;
        }
        if let Ok(v) = itb_time(t, 0, j) {
            time_sum += v;
            n_time += 1;
        }
        gain += t.performance(j) - t.performance(0);
        interactions += t.records[..=j].iter().map(|r| r.u_i as u64).sum::<u64>();
    }
    Ok(WindowSummary {
        window: name.to_string(),
        itb_time: if n_time > 0 { time_sum / n_time as f64 } else { 0.0 },
        itb_user: (interactions > 0).then(|| gain / interactions as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::TraceRecord;
    use proptest::prelude::*;

    fn rec(step: u64, action: Option<u8>, t: f64, ap: f64) -> TraceRecord {
        TraceRecord {
            episode_id: 0,
            step,
            action_id: action,
            t_i: 0.0,
            t_elapsed: t,
            u_i: (action == Some(1)) as u8,
            ap,
            r_total: 0.0,
            r_learn: 0.0,
            r_behave: 0.0,
            r_time: 0.0,
            k: 1,
            j: 0,
            win: false,
            done: false,
        }
    }

    fn trace(steps: &[(u8, f64, f64)], p0: f64) -> EpisodeTrace {
        let mut records = vec![rec(0, None, 0.0, p0)];
        for (i, &(a, t, ap)) in steps.iter().enumerate() {
            records.push(rec(i as u64 + 1, Some(a), t, ap));
        }
        EpisodeTrace { records }
    }

    #[test]
    fn itb_user_examples() {
        let t = trace(&[(1, 1.0, 0.2), (1, 2.0, 0.3), (1, 3.0, 0.4), (1, 4.0, 0.5), (1, 5.0, 0.6)], 0.1);
        assert!((itb_user(&t, 0, 5).unwrap().unwrap() - 0.1).abs() < 1e-12);
        let idle = trace(&[(0, 1.0, 0.1), (2, 2.0, 0.1)], 0.1);
        assert_eq!(itb_user(&idle, 0, 2).unwrap(), None);
        assert!(itb_user(&idle, 2, 1).is_err());
    }

    #[test]
    fn itb_time_examples() {
        let t = trace(&[(1, 300.0, 0.6)], 0.0);
        assert!((itb_time(&t, 0, 1).unwrap() - 2.0e-3).abs() < 1e-15);
        let flat = trace(&[(0, 10.0, 0.0)], 0.0);
        assert_eq!(itb_time(&flat, 0, 1).unwrap(), 0.0);
        let instant = trace(&[(0, 0.0, 0.0)], 0.0);
        assert_eq!(itb_time(&instant, 0, 1), Err(MetricsError::ZeroInterval));
    }

    #[test]
    fn binning_examples() {
        let t = trace(&[(0, 0.3, 0.2), (0, 0.7, 0.4), (0, 2.5, 0.9)], 0.0);
        let c = bin_performance(&[t], 300).unwrap();
        assert_eq!(c.horizon(), 300);
        assert!((c.bins[0] - 0.3).abs() < 1e-12);
        assert!((c.bins[1] - 0.3).abs() < 1e-12);
        assert_eq!(c.bins[2], 0.9);
        assert_eq!(c.bins[299], 0.9);
        let late = trace(&[(0, 1.5, 0.5)], 0.25);
        assert_eq!(bin_performance(&[late], 3).unwrap().bins, vec![0.25, 0.5, 0.5]);
        assert_eq!(bin_performance(&[], 3), Err(MetricsError::Empty));
    }

    #[test]
    fn constant_trace_gives_constant_curve() {
        let t = trace(&[(0, 0.5, 0.4), (3, 4.2, 0.4), (0, 9.9, 0.4)], 0.4);
        assert!(bin_performance(&[t], 20).unwrap().bins.iter().all(|&b| b == 0.4));
    }

    #[test]
    fn action_fractions() {
        let t = trace(&[(1, 1.0, 0.0), (1, 2.0, 0.0), (2, 3.0, 0.0), (3, 4.0, 0.0)], 0.0);
        let d = action_distribution(&[t]).unwrap();
        assert_eq!((d.dont_move, d.request_user, d.motion), (0.0, 0.5, 0.5));
        let idle = trace(&[(0, 1.0, 0.0), (0, 2.0, 0.0)], 0.0);
        assert_eq!(action_distribution(&[idle]).unwrap().dont_move, 1.0);
    }

    #[test]
    fn refused_moves_are_counted_apart() {
        let mut t = trace(&[(5, 1.0, 0.0), (2, 2.0, 0.0), (4, 3.0, 0.0), (0, 4.0, 0.0)], 0.0);
        t.records[2].j = 1;
        t.records[3].j = 1;
        t.records[4].j = 1;
        let d = action_distribution(&[t]).unwrap();
        assert_eq!((d.motion, d.blocked_motion, d.moving()), (0.75, 0.5, 0.25));
    }

    #[test]
    fn first_minute_window() {
        let t = trace(&[(1, 30.0, 0.3), (0, 59.0, 0.5), (1, 90.0, 0.9)], 0.0);
        let w = summarize_window(&[t.clone()], "first_60s", Some(60.0)).unwrap();
        assert!((w.itb_time - 0.5 / 59.0).abs() < 1e-12);
        assert_eq!(w.itb_user, Some(0.5));
        let all = summarize_window(&[t], "full", None).unwrap();
        assert!((all.itb_time - 0.01).abs() < 1e-12);
        assert_eq!(all.itb_user, Some(0.45));
    }

    proptest! {
        #[test]
        fn fractions_sum_to_one(actions in proptest::collection::vec(0u8..6, 1..200)) {
            let steps: Vec<(u8, f64, f64)> = actions.iter().enumerate().map(|(i, &a)| (a, i as f64, 0.0)).collect();
            let d = action_distribution(&[trace(&steps, 0.0)]).unwrap();
            prop_assert!((d.dont_move + d.request_user + d.motion - 1.0).abs() < 1e-12);
        }

        #[test]
        fn numerators_are_additive(aps in proptest::collection::vec(0.0f64..1.0, 3..30), split in 0.0f64..1.0) {
            let steps: Vec<(u8, f64, f64)> = aps.iter().enumerate().map(|(i, &ap)| (1, i as f64 + 1.0, ap)).collect();
            let t = trace(&steps, 0.0);
            let j = aps.len();
            let k = 1 + ((j - 2) as f64 * split) as usize;
            let num = |a: usize, b: usize| itb_time(&t, a, b).unwrap() * (t.records[b].t_elapsed - t.records[a].t_elapsed);
            prop_assert!((num(0, j) - num(0, k) - num(k, j)).abs() < 1e-12);
        }
    }
}
