//! Episode-structured replay memory for sequence sampling.

use crate::env::AgentObservation;
use rand::Rng;
use std::collections::VecDeque;

/// A finished episode: `observations` has one more entry than the other
/// vectors (the state after the last action).
#[derive(Debug, Clone, PartialEq)]
pub struct StoredEpisode {
    pub observations: Vec<AgentObservation>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub terminals: Vec<bool>,
}

impl StoredEpisode {
    pub fn new(first: AgentObservation) -> Self {
        Self { observations: vec![first], actions: Vec::new(), rewards: Vec::new(), terminals: Vec::new() }
    }

    pub fn push(&mut self, action: usize, reward: f64, terminal: bool, next: AgentObservation) {
        self.actions.push(action);
        self.rewards.push(reward);
        self.terminals.push(terminal);
        self.observations.push(next);
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// A window of consecutive transitions from one episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SequenceRef {
    pub episode: usize,
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    seq_len: usize,
    episodes: VecDeque<StoredEpisode>,
    transitions: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, seq_len: usize) -> Self {
        Self { capacity, seq_len: seq_len.max(1), episodes: VecDeque::new(), transitions: 0 }
    }

    pub fn len(&self) -> usize {
        self.transitions
    }

    pub fn is_empty(&self) -> bool {
        self.transitions == 0
    }

    pub fn episodes(&self) -> usize {
        self.episodes.len()
    }

    pub fn episode(&self, i: usize) -> &StoredEpisode {
        &self.episodes[i]
    }

    /// Adds an episode, evicting the oldest ones beyond capacity. The newest
    /// episode is always kept.
    pub fn push(&mut self, episode: StoredEpisode) {
        if episode.is_empty() {
            return;
        }
        self.transitions += episode.len();
        self.episodes.push_back(episode);
        while self.transitions > self.capacity && self.episodes.len() > 1 {
            let old = self.episodes.pop_front().unwrap();
            self.transitions -= old.len();
        }
    }

    /// Picks a transition uniformly and returns the window of up to
    /// `seq_len` transitions containing it, clipped to its episode.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Option<SequenceRef> {
        if self.transitions == 0 {
            return None;
        }
        let mut k = rng.gen_range(0..self.transitions);
        for (i, ep) in self.episodes.iter().enumerate() {
            if k < ep.len() {
                let len = self.seq_len.min(ep.len());
                let start = k.min(ep.len() - len);
                return Some(SequenceRef { episode: i, start, len });
            }
            k -= ep.len();
        }
        unreachable!("transition count out of sync")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn obs(tag: u8) -> AgentObservation {
        AgentObservation { size: 1, matrix: vec![tag; 5], position: (0.0, 0.0) }
    }

    fn episode(tag: u8, n: usize) -> StoredEpisode {
        let mut e = StoredEpisode::new(obs(tag));
        for i in 0..n {
            e.push(i % 6, 0.0, i + 1 == n, obs(tag));
        }
        e
    }

    #[test]
    fn sequences_stay_inside_episodes() {
        let mut buf = ReplayBuffer::new(1000, 8);
        for (tag, n) in [(1, 3), (2, 20), (3, 9), (4, 1)] {
            buf.push(episode(tag, n));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..2000 {
            let s = buf.sample(&mut rng).unwrap();
            let ep = buf.episode(s.episode);
            assert!(s.start + s.len <= ep.len());
            assert_eq!(s.len, 8.min(ep.len()));
            let tag = ep.observations[0].matrix[0];
            assert!(ep.observations[s.start..=s.start + s.len].iter().all(|o| o.matrix[0] == tag));
        }
    }

    #[test]
    fn evicts_oldest() {
        let mut buf = ReplayBuffer::new(25, 4);
        buf.push(episode(1, 10));
        buf.push(episode(2, 10));
        buf.push(episode(3, 10));
        assert_eq!(buf.episodes(), 2);
        assert_eq!(buf.len(), 20);
        assert_eq!(buf.episode(0).observations[0].matrix[0], 2);
    }
}
