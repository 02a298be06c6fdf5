//! Discretized planar-disk exploration space.
//!
//! The drone flies on a horizontal disk above the subject. The disk is split
//! into `n_orbits` concentric orbits spaced `delta_r` apart (the innermost one
//! sits one spacing from the center) and every orbit carries `n_angles` points
//! spaced `delta_alpha` degrees apart. Angles run counter-clockwise from +x.

use crate::math::Vec3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OrbitError {
    #[error("angular step {0} deg does not divide 360")]
    AngleStep(f64),
    #[error("line-of-sight distance must be positive, got {0}")]
    Distance(f64),
    #[error("elevation angle must lie in (0, 90) degrees, got {0}")]
    Elevation(f64),
    #[error("at least one orbit is required")]
    NoOrbits,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitSpaceConfig {
    /// Line-of-sight distance from subject to the outer orbit, meters.
    pub d: f64,
    /// Elevation angle of the outer orbit seen from the subject, degrees.
    pub theta: f64,
    /// Angular step between neighbouring points, degrees.
    pub delta_alpha: f64,
    pub n_orbits: usize,
}

impl Default for OrbitSpaceConfig {
    fn default() -> Self {
        Self { d: 60.0, theta: 30.0, delta_alpha: 12.0, n_orbits: 6 }
    }
}

impl OrbitSpaceConfig {
    pub fn validate(&self) -> Result<(), OrbitError> {
        if !(self.d > 0.0) || !self.d.is_finite() {
            return Err(OrbitError::Distance(self.d));
        }
        if !(self.theta > 0.0 && self.theta < 90.0) {
            return Err(OrbitError::Elevation(self.theta));
        }
        if self.n_orbits == 0 {
            return Err(OrbitError::NoOrbits);
        }
        if !(self.delta_alpha > 0.0) {
            return Err(OrbitError::AngleStep(self.delta_alpha));
        }
        let steps = 360.0 / self.delta_alpha;
        if (steps - steps.round()).abs() > 1e-9 || steps.round() < 1.0 {
            return Err(OrbitError::AngleStep(self.delta_alpha));
        }
        Ok(())
    }
}

/// Quantities derived once from an [`OrbitSpaceConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedGeometry {
    pub config: OrbitSpaceConfig,
    /// Outer orbit radius, meters.
    pub r_max: f64,
    /// Spacing between orbits; also the innermost orbit radius.
    pub delta_r: f64,
    pub n_angles: usize,
    /// Altitude of the disk above the ground plane, meters.
    pub height: f64,
}

/// Validates `config` and derives the disk geometry from it.
pub fn derive_geometry(config: OrbitSpaceConfig) -> Result<DerivedGeometry, OrbitError> {
    config.validate()?;
    let theta = config.theta.to_radians();
    let r_max = config.d * theta.cos();
    Ok(DerivedGeometry {
        config,
        r_max,
        delta_r: r_max / config.n_orbits as f64,
        n_angles: (360.0 / config.delta_alpha).round() as usize,
        height: config.d * theta.sin(),
    })
}

/// A point of the exploration space. `orbit` is 1-based (1 = innermost).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridPosition {
    pub orbit: usize,
    pub angle: usize,
}

impl GridPosition {
    pub const fn new(orbit: usize, angle: usize) -> Self {
        Self { orbit, angle }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    /// Counter-clockwise, `alpha += delta_alpha`.
    Left,
    /// Clockwise, `alpha -= delta_alpha`.
    Right,
    /// One orbit inwards.
    Forward,
    /// One orbit outwards.
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: Vec3,
    pub look_at: Vec3,
}

impl DerivedGeometry {
    pub fn n_orbits(&self) -> usize {
        self.config.n_orbits
    }

    pub fn n_positions(&self) -> usize {
        self.n_orbits() * self.n_angles
    }

    pub fn radius(&self, orbit: usize) -> f64 {
        orbit as f64 * self.delta_r
    }

    pub fn angle_deg(&self, angle: usize) -> f64 {
        angle as f64 * self.config.delta_alpha
    }

    /// Outer orbit, angle zero: where every episode starts.
    pub fn start_position(&self) -> GridPosition {
        GridPosition::new(self.n_orbits(), 0)
    }

    pub fn contains(&self, pos: GridPosition) -> bool {
        (1..=self.n_orbits()).contains(&pos.orbit) && pos.angle < self.n_angles
    }

    /// All grid points, orbit-major (innermost orbit first).
    pub fn positions(&self) -> impl Iterator<Item = GridPosition> + '_ {
        (1..=self.n_orbits())
            .flat_map(move |k| (0..self.n_angles).map(move |j| GridPosition::new(k, j)))
    }

    /// Dense index of `pos` in [`positions`](Self::positions) order.
    pub fn index_of(&self, pos: GridPosition) -> usize {
        (pos.orbit - 1) * self.n_angles + pos.angle
    }

    /// Radial moves clamp silently at the innermost and outermost orbits.
    pub fn apply_move(&self, pos: GridPosition, mv: Move) -> GridPosition {
        let n = self.n_angles;
        match mv {
            Move::Left => GridPosition::new(pos.orbit, (pos.angle + 1) % n),
            Move::Right => GridPosition::new(pos.orbit, (pos.angle + n - 1) % n),
            Move::Forward if pos.orbit > 1 => GridPosition::new(pos.orbit - 1, pos.angle),
            Move::Backward if pos.orbit < self.n_orbits() => {
                GridPosition::new(pos.orbit + 1, pos.angle)
            }
            Move::Forward | Move::Backward => pos,
        }
    }

    /// Camera placed on the disk (relative to the unperturbed center) and
    /// aimed at `aim_point` on the ground.
    pub fn camera_pose(&self, pos: GridPosition, aim_point: Vec3) -> CameraPose {
        let r = self.radius(pos.orbit);
        let a = self.angle_deg(pos.angle).to_radians();
        CameraPose {
            position: Vec3::new(r * a.cos(), r * a.sin(), self.height),
            look_at: aim_point,
        }
    }

    /// `(alpha / 360, r / r_max)`.
    pub fn normalized_position(&self, pos: GridPosition) -> (f64, f64) {
        (
            self.angle_deg(pos.angle) / 360.0,
            pos.orbit as f64 / self.n_orbits() as f64,
        )
    }

    /// Path length of one angular step on `orbit`.
    pub fn arc_length(&self, orbit: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.radius(orbit) * self.config.delta_alpha / 360.0
    }

    /// Straight-line distance between angular neighbours on `orbit`.
    pub fn chord_length(&self, orbit: usize) -> f64 {
        2.0 * self.radius(orbit) * (self.config.delta_alpha.to_radians() / 2.0).sin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn default_geom() -> DerivedGeometry {
        derive_geometry(OrbitSpaceConfig::default()).unwrap()
    }

    #[test]
    fn default_geometry() {
        let g = default_geom();
        assert!((g.delta_r - 8.66).abs() < 0.005);
        assert!((g.r_max - 51.961_524_227_066_32).abs() < 1e-9);
        assert!((g.height - 30.0).abs() < 1e-9);
        assert_eq!(g.n_angles, 30);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = |c: OrbitSpaceConfig| derive_geometry(c).unwrap_err();
        let base = OrbitSpaceConfig::default();
        assert_eq!(bad(OrbitSpaceConfig { delta_alpha: 11.0, ..base }), OrbitError::AngleStep(11.0));
        assert_eq!(bad(OrbitSpaceConfig { d: 0.0, ..base }), OrbitError::Distance(0.0));
        assert_eq!(bad(OrbitSpaceConfig { n_orbits: 0, ..base }), OrbitError::NoOrbits);
        assert_eq!(bad(OrbitSpaceConfig { theta: 90.0, ..base }), OrbitError::Elevation(90.0));
    }

    #[test]
    fn moves_wrap_and_clamp() {
        let g = default_geom();
        assert_eq!(g.apply_move(GridPosition::new(3, 29), Move::Left), GridPosition::new(3, 0));
        assert_eq!(g.apply_move(GridPosition::new(3, 0), Move::Right), GridPosition::new(3, 29));
        assert_eq!(g.apply_move(GridPosition::new(1, 5), Move::Forward), GridPosition::new(1, 5));
        assert_eq!(g.apply_move(GridPosition::new(6, 5), Move::Backward), GridPosition::new(6, 5));
        assert_eq!(g.apply_move(GridPosition::new(4, 5), Move::Forward), GridPosition::new(3, 5));
    }

    #[test]
    fn camera_positions() {
        let g = default_geom();
        let close = |a: Vec3, b: Vec3| (a - b).norm() < 1e-3;
        let p = g.camera_pose(GridPosition::new(6, 0), Vec3::ZERO);
        assert!(close(p.position, Vec3::new(51.9615, 0.0, 30.0)));
        let p = g.camera_pose(GridPosition::new(6, 15), Vec3::ZERO);
        assert!(close(p.position, Vec3::new(-51.9615, 0.0, 30.0)));
        let p = g.camera_pose(GridPosition::new(3, 0), Vec3::new(1.0, 2.0, 0.0));
        assert!(close(p.position, Vec3::new(25.981, 0.0, 30.0)));
        assert_eq!(p.look_at, Vec3::new(1.0, 2.0, 0.0));
    }

    #[test]
    fn normalized_positions() {
        let g = default_geom();
        assert_eq!(g.normalized_position(GridPosition::new(6, 15)), (0.5, 1.0));
        assert_eq!(g.normalized_position(GridPosition::new(3, 0)).1, 0.5);
    }

    #[test]
    fn position_index_is_dense() {
        let g = default_geom();
        for (i, p) in g.positions().enumerate() {
            assert_eq!(g.index_of(p), i);
        }
        assert_eq!(g.positions().count(), 180);
    }

    fn any_move() -> impl Strategy<Value = Move> {
        prop_oneof![Just(Move::Left), Just(Move::Right), Just(Move::Forward), Just(Move::Backward)]
    }

    proptest! {
        #[test]
        fn moves_stay_in_bounds(moves in proptest::collection::vec(any_move(), 0..200)) {
            let g = default_geom();
            let mut p = g.start_position();
            for m in moves {
                p = g.apply_move(p, m);
                prop_assert!(g.contains(p));
            }
        }

        #[test]
        fn opposite_moves_cancel(k in 2usize..6, j in 0usize..30) {
            let g = default_geom();
            let p = GridPosition::new(k, j);
            prop_assert_eq!(g.apply_move(g.apply_move(p, Move::Left), Move::Right), p);
            prop_assert_eq!(g.apply_move(g.apply_move(p, Move::Right), Move::Left), p);
            prop_assert_eq!(g.apply_move(g.apply_move(p, Move::Forward), Move::Backward), p);
        }

        #[test]
        fn neighbour_chord_and_height(k in 1usize..=6, j in 0usize..30) {
            let g = default_geom();
            let a = g.camera_pose(GridPosition::new(k, j), Vec3::ZERO).position;
            let b = g.camera_pose(g.apply_move(GridPosition::new(k, j), Move::Left), Vec3::ZERO).position;
            prop_assert!(((a - b).norm() - g.chord_length(k)).abs() < 1e-9);
            prop_assert!(g.chord_length(k) < g.arc_length(k));
            prop_assert!((a.z - g.height).abs() < 1e-12);
        }
    }
}
