//! Time model and reward decomposition.

use super::Action;
use crate::orbit::{DerivedGeometry, GridPosition, Move};
use serde::{Deserialize, Serialize};

/// Physical characteristics of the platform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeParams {
    /// Seconds per user annotation.
    pub t_click: f64,
    /// Seconds per training round.
    pub t_train: f64,
    /// Airspeed, meters per second.
    pub s_a: f64,
    /// Seconds charged for a step in which nothing happens.
    pub t_idle: f64,
}

impl TimeParams {
    /// Slow drone, fast trainer.
    pub const AGENT_A: TimeParams = TimeParams { t_click: 0.9, t_train: 0.305, s_a: 2.5, t_idle: 0.305 };
    /// Fast drone, slow trainer.
    pub const AGENT_B: TimeParams = TimeParams { t_click: 0.9, t_train: 2.5, s_a: 10.0, t_idle: 2.5 };

    pub fn is_valid(&self) -> bool {
        [self.t_click, self.t_train, self.s_a, self.t_idle].iter().all(|v| *v > 0.0 && v.is_finite())
    }
}

impl Default for TimeParams {
    fn default() -> Self {
        Self::AGENT_A
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    /// Weight of the learning reward against the negative rewards.
    pub w_p: f64,
    /// Weight of the behavioural penalty against the time penalty.
    pub w_n: f64,
    /// Time penalty per second.
    pub c_t: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self { w_p: 0.5, w_n: 0.0, c_t: 0.08 }
    }
}

impl RewardWeights {
    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.w_p) && (0.0..=1.0).contains(&self.w_n) && self.c_t >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_total: f64,
    pub r_learn: f64,
    pub r_behave: f64,
    pub r_time: f64,
}

/// Duration of one action-step.
///
/// Moves take the flight time (arc on the current orbit, or one orbit
/// spacing radially), overlapped with training when a round runs during the
/// transit. A radial move blocked at the innermost or outermost orbit does
/// not fly and is charged like `DontMove`.
pub fn elapsed_time(
    action: Action,
    pos_before: GridPosition,
    trained: bool,
    params: &TimeParams,
    geom: &DerivedGeometry,
) -> f64 {
    let stay = if trained { params.t_train } else { params.t_idle };
    match action {
        Action::DontMove => stay,
        Action::RequestUser => params.t_click + if trained { params.t_train } else { 0.0 },
        _ => {
            let mv = action.movement().expect("motion action");
            let distance = match mv {
                Move::Left | Move::Right => geom.arc_length(pos_before.orbit),
                Move::Forward | Move::Backward => {
                    if geom.apply_move(pos_before, mv) == pos_before {
                        return stay;
                    }
                    geom.delta_r
                }
            };
            let t_move = distance / params.s_a;
            if trained {
                t_move.max(params.t_train)
            } else {
                t_move
            }
        }
    }
}

/// Capped learning reward, request penalty, time penalty, and their
/// weighted sum. A win step is worth exactly 1.
pub fn reward_components(delta_ap: f64, action: Action, t_i: f64, weights: &RewardWeights, win: bool) -> RewardBreakdown {
    let r_learn = (10.0 * delta_ap).clamp(-1.0, 1.0);
    let r_behave = if action == Action::RequestUser { -1.0 } else { 0.0 };
    let r_time = -weights.c_t * t_i;
    let r_negative = weights.w_n * r_behave + (1.0 - weights.w_n) * r_time;
    let r_total = if win { 1.0 } else { weights.w_p * r_learn + (1.0 - weights.w_p) * r_negative };
    RewardBreakdown { r_total, r_learn, r_behave, r_time }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::{derive_geometry, OrbitSpaceConfig};
    use proptest::prelude::*;

    fn geom() -> DerivedGeometry {
        derive_geometry(OrbitSpaceConfig::default()).unwrap()
    }

    #[test]
    fn time_examples() {
        let g = geom();
        let outer = GridPosition::new(6, 0);
        let a = TimeParams::AGENT_A;
        let b = TimeParams::AGENT_B;
        let t = elapsed_time(Action::MoveLeft, outer, true, &a, &g);
        assert!((t - 4.353_118_474_162_121).abs() < 1e-9, "{t}");
        let t = elapsed_time(Action::MoveForward, outer, true, &b, &g);
        assert_eq!(t, 2.5);
        let t = elapsed_time(Action::RequestUser, outer, true, &a, &g);
        assert!((t - 1.205).abs() < 1e-12);
        assert_eq!(elapsed_time(Action::RequestUser, outer, false, &a, &g), 0.9);
        assert_eq!(elapsed_time(Action::DontMove, outer, false, &a, &g), a.t_idle);
        // Blocked outward move.
        assert_eq!(elapsed_time(Action::MoveBackward, outer, false, &a, &g), a.t_idle);
    }

    #[test]
    fn reward_examples() {
        let w = RewardWeights { w_p: 0.5, w_n: 0.5, c_t: 0.08 };
        let r = reward_components(0.0, Action::DontMove, 2.5, &w, false);
        assert!((r.r_time + 0.2).abs() < 1e-15);
        let r = reward_components(0.05, Action::MoveLeft, 2.5, &w, false);
        assert!((r.r_learn - 0.5).abs() < 1e-15);
        assert!((r.r_total - 0.2).abs() < 1e-15);
        assert_eq!(reward_components(-0.5, Action::RequestUser, 9.0, &w, true).r_total, 1.0);
        assert_eq!(reward_components(0.3, Action::DontMove, 1.0, &w, false).r_learn, 1.0);
        assert_eq!(reward_components(0.0, Action::RequestUser, 1.0, &w, false).r_behave, -1.0);
    }

    proptest! {
        #[test]
        fn reward_composition(
            d in -1.0..1.0f64, a in 0usize..6, t in 0.0..12.5f64,
            w_p in 0.0..=1.0f64, w_n in 0.0..=1.0f64,
        ) {
            let w = RewardWeights { w_p, w_n, c_t: 0.08 };
            let r = reward_components(d, Action::from_id(a).unwrap(), t, &w, false);
            prop_assert!((-1.0..=1.0).contains(&r.r_learn));
            prop_assert!(r.r_behave == 0.0 || r.r_behave == -1.0);
            let expected = w_p * r.r_learn + (1.0 - w_p) * (w_n * r.r_behave + (1.0 - w_n) * r.r_time);
            prop_assert!((r.r_total - expected).abs() < 1e-12);
            prop_assert!(r.r_total.abs() <= 1.0 + 1e-12);
        }
    }
}
