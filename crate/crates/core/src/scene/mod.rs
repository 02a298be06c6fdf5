//! Procedural scenes: one subject at the origin, two recoloured duplicates
//! of it (confusors), and randomly placed, rotated, and stretched obstructions.

mod ppm;
mod render;
mod shapes;

pub use ppm::{read_ppm, write_ppm, PpmError};
pub use render::{ground_truth_bbox, render_frame, render_view, Camera};
pub use shapes::{LocalHit, ObstructionKind, Primitive, SubjectKind};

use crate::math::Vec3;
use crate::trainee::BBox;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("placement annulus must satisfy 0 <= inner < outer < orbit radius ({inner}, {outer}, {orbit_radius})")]
    Annulus { inner: f64, outer: f64, orbit_radius: f64 },
    #[error("obstruction count range {0}..={1} is empty")]
    ObstructionRange(usize, usize),
    #[error("center perturbation must be non-negative")]
    Perturbation,
    #[error("no subject kinds configured")]
    NoSubjects,
    #[error("field of view must lie in (0, 180) degrees")]
    FieldOfView,
    #[error("image size must be positive")]
    ImageSize,
    #[error("stretch range must be positive and ordered")]
    Stretch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    /// Inclusive obstruction count range.
    pub n_obs_range: (usize, usize),
    /// Inner and outer obstruction placement radii, meters.
    pub annulus: (f64, f64),
    pub max_center_perturbation: f64,
    pub subject_kinds: Vec<SubjectKind>,
    /// Square field of view, degrees.
    pub fov: f64,
    pub image_size: usize,
    /// Minimum circular hue distance between subject and confusors.
    pub min_hue_distance: f64,
    /// Per-axis stretch range applied to obstructions.
    pub stretch: (f64, f64),
    /// Altitude of the flight disk; obstructions stay below it.
    pub flight_height: f64,
    /// Outer orbit radius; the placement annulus must fit inside.
    pub orbit_radius: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            n_obs_range: (15, 25),
            annulus: (10.0, 35.0),
            max_center_perturbation: 5.0,
            subject_kinds: SubjectKind::ALL.to_vec(),
            fov: 37.2,
            image_size: 84,
            min_hue_distance: 1.0 / 6.0,
            stretch: (0.5, 2.0),
            flight_height: 30.0,
            orbit_radius: 60.0 * 30f64.to_radians().cos(),
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SceneError> {
        let (inner, outer) = self.annulus;
        if !(inner >= 0.0 && inner < outer && outer < self.orbit_radius) {
            return Err(SceneError::Annulus { inner, outer, orbit_radius: self.orbit_radius });
        }
        if self.n_obs_range.0 > self.n_obs_range.1 {
            return Err(SceneError::ObstructionRange(self.n_obs_range.0, self.n_obs_range.1));
        }
        if !(self.max_center_perturbation >= 0.0) {
            return Err(SceneError::Perturbation);
        }
        if self.subject_kinds.is_empty() {
            return Err(SceneError::NoSubjects);
        }
        if !(self.fov > 0.0 && self.fov < 180.0) {
            return Err(SceneError::FieldOfView);
        }
        if self.image_size == 0 {
            return Err(SceneError::ImageSize);
        }
        if !(self.stretch.0 > 0.0 && self.stretch.0 <= self.stretch.1) {
            return Err(SceneError::Stretch);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Subject(SubjectKind),
    Obstruction(ObstructionKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub kind: ObjectKind,
    /// Solids in the object frame, before stretch and yaw.
    pub primitives: Vec<Primitive>,
    /// Ground-plane position of the object origin.
    pub position: (f64, f64),
    pub yaw: f64,
    pub scale: Vec3,
    pub hue: f64,
}

/// Fixed saturation and value of every object colour.
pub const SATURATION: f64 = 0.8;
pub const VALUE: f64 = 0.9;

impl SceneObject {
    fn new(kind: ObjectKind, position: (f64, f64), yaw: f64, scale: Vec3, hue: f64) -> Self {
        let primitives = match kind {
            ObjectKind::Subject(k) => k.primitives(),
            ObjectKind::Obstruction(k) => k.primitives(),
        };
        Self { kind, primitives, position, yaw, scale, hue }
    }

    pub fn origin(&self) -> Vec3 {
        Vec3::new(self.position.0, self.position.1, 0.0)
    }

    pub fn height(&self) -> f64 {
        self.primitives.iter().map(Primitive::top).fold(0.0, f64::max) * self.scale.z
    }

    /// Radius of a ground circle around `position` covering the footprint.
    pub fn footprint_radius(&self) -> f64 {
        self.primitives
            .iter()
            .map(|p| {
                let (rx, ry) = p.horizontal_reach();
                (rx * self.scale.x).hypot(ry * self.scale.y)
            })
            .fold(0.0, f64::max)
    }

    pub fn bounding_radius(&self) -> f64 {
        let s = self.scale.x.max(self.scale.y).max(self.scale.z);
        self.primitives.iter().map(Primitive::bounding_radius).fold(0.0, f64::max) * s
    }

    pub fn rgb(&self) -> [f64; 3] {
        hsv_to_rgb(self.hue, SATURATION, VALUE)
    }

    fn overlaps(&self, other: &SceneObject) -> bool {
        let (dx, dy) = (self.position.0 - other.position.0, self.position.1 - other.position.1);
        dx.hypot(dy) < self.footprint_radius() + other.footprint_radius()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub subject: SceneObject,
    pub confusors: Vec<SceneObject>,
    pub obstructions: Vec<SceneObject>,
    /// Offset of the camera aim point from the subject, meters.
    pub aim_offset: (f64, f64),
    pub seed: u64,
    /// Obstruction count drawn before overlap rejection.
    pub n_obs_drawn: usize,
}

impl Scene {
    pub fn aim_point(&self) -> Vec3 {
        Vec3::new(self.aim_offset.0, self.aim_offset.1, 0.0)
    }

    /// Subject first, then confusors, then obstructions.
    pub fn objects(&self) -> impl Iterator<Item = &SceneObject> {
        std::iter::once(&self.subject).chain(&self.confusors).chain(&self.obstructions)
    }

    /// Same geometry with the subject recoloured.
    pub fn with_subject_hue(&self, hue: f64) -> Scene {
        let mut s = self.clone();
        s.subject.hue = hue.rem_euclid(1.0);
        s
    }
}

pub fn hue_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h6 = h.rem_euclid(1.0) * 6.0;
    let sector = (h6.floor() as usize) % 6;
    let f = h6 - h6.floor();
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

const CONFUSOR_PLACEMENT_TRIES: usize = 64;

/// Builds the scene for `seed`. Obstructions overlapping the subject are
/// dropped, not re-placed; confusors are re-drawn until they clear it.
pub fn generate_scene(config: &SceneConfig, seed: u64) -> Result<Scene, SceneError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let kind = config.subject_kinds[rng.gen_range(0..config.subject_kinds.len())];
    let subject_hue = rng.gen::<f64>();
    let subject = SceneObject::new(
        ObjectKind::Subject(kind),
        (0.0, 0.0),
        rng.gen_range(0.0..360.0),
        Vec3::new(1.0, 1.0, 1.0),
        subject_hue,
    );

    let radius = (config.max_center_perturbation * rng.gen::<f64>().sqrt()).min(config.max_center_perturbation);
    let bearing = rng.gen_range(0.0..std::f64::consts::TAU);
    let aim_offset = (radius * bearing.cos(), radius * bearing.sin());

    let (inner, outer) = config.annulus;
    let draw_ring_point = |rng: &mut ChaCha8Rng| {
        // Uniform by area over the annulus.
        let r = (inner * inner + rng.gen::<f64>() * (outer * outer - inner * inner)).sqrt();
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        (r * a.cos(), r * a.sin())
    };

    let mut confusors = Vec::with_capacity(2);
    for _ in 0..2 {
        let mut hue = rng.gen::<f64>();
        while hue_distance(hue, subject_hue) < config.min_hue_distance {
            hue = rng.gen::<f64>();
        }
        let yaw = rng.gen_range(0.0..360.0);
        let mut obj = SceneObject::new(ObjectKind::Subject(kind), (0.0, 0.0), yaw, Vec3::new(1.0, 1.0, 1.0), hue);
        let mut placed = false;
        for _ in 0..CONFUSOR_PLACEMENT_TRIES {
            obj.position = draw_ring_point(&mut rng);
            if !obj.overlaps(&subject) {
                placed = true;
                break;
            }
        }
        if !placed {
            // Push straight out along the last bearing until clear.
            let (x, y) = obj.position;
            let r = x.hypot(y).max(1e-9);
            let needed = subject.footprint_radius() + obj.footprint_radius() + 1e-6;
            obj.position = (x / r * needed, y / r * needed);
        }
        confusors.push(obj);
    }

    let n_obs_drawn = rng.gen_range(config.n_obs_range.0..=config.n_obs_range.1);
    let max_height = 0.9 * config.flight_height;
    let mut obstructions = Vec::with_capacity(n_obs_drawn);
    for _ in 0..n_obs_drawn {
        let kind = ObstructionKind::ALL[rng.gen_range(0..ObstructionKind::ALL.len())];
        let (lo, hi) = config.stretch;
        let mut scale = Vec3::new(rng.gen_range(lo..=hi), rng.gen_range(lo..=hi), rng.gen_range(lo..=hi));
        let yaw = rng.gen_range(0.0..360.0);
        let hue = rng.gen::<f64>();
        let position = draw_ring_point(&mut rng);
        let mut obj = SceneObject::new(ObjectKind::Obstruction(kind), position, yaw, scale, hue);
        let h = obj.height();
        if h > max_height {
            scale.z *= max_height / h;
            obj.scale = scale;
        }
        if obj.overlaps(&subject) {
            continue;
        }
        obstructions.push(obj);
    }

    Ok(Scene { subject, confusors, obstructions, aim_offset, seed, n_obs_drawn })
}

/// A rendered square RGB image, row-major, 3 bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewImage {
    pub size: usize,
    pub pixels: Vec<u8>,
}

impl ViewImage {
    pub fn new(size: usize) -> Self {
        Self { size, pixels: vec![0; size * size * 3] }
    }

    pub fn filled(size: usize, rgb: [u8; 3]) -> Self {
        Self { size, pixels: rgb.iter().copied().cycle().take(size * size * 3).collect() }
    }

    pub fn rgb(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.size + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_rgb(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.size + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Mean of the three channels scaled to [0, 1].
    pub fn intensity(&self, x: usize, y: usize) -> f64 {
        let [r, g, b] = self.rgb(x, y);
        (r as f64 + g as f64 + b as f64) / (3.0 * 255.0)
    }
}

/// Annotation oracle output for one view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub bbox: Option<BBox>,
    /// Visible subject pixels over subject pixels with all occluders removed.
    pub visible_fraction: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn every_scene_has_two_confusors_and_bounded_offset() {
        let cfg = SceneConfig::default();
        for seed in 0..200 {
            let s = generate_scene(&cfg, seed).unwrap();
            assert_eq!(s.confusors.len(), 2);
            assert!(s.aim_offset.0.hypot(s.aim_offset.1) <= 5.0 + 1e-12);
            for c in &s.confusors {
                assert!(hue_distance(c.hue, s.subject.hue) >= cfg.min_hue_distance);
                assert!(!c.overlaps(&s.subject));
                assert_eq!(c.kind, s.subject.kind);
            }
            for o in &s.obstructions {
                assert!(!o.overlaps(&s.subject));
                assert!(o.height() < cfg.flight_height);
                let r = o.position.0.hypot(o.position.1);
                assert!(r >= cfg.annulus.0 - 1e-9 && r <= cfg.annulus.1 + 1e-9);
            }
            assert!(s.obstructions.len() <= s.n_obs_drawn);
        }
    }

    #[test]
    fn overlapping_obstructions_are_dropped() {
        // A subject wider than the annulus inner radius forces rejections.
        let cfg = SceneConfig { subject_kinds: vec![SubjectKind::Train], annulus: (5.0, 14.0), ..SceneConfig::default() };
        let dropped: usize = (0..50)
            .map(|seed| {
                let s = generate_scene(&cfg, seed).unwrap();
                s.n_obs_drawn - s.obstructions.len()
            })
            .sum();
        assert!(dropped > 0);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SceneConfig::default();
        let a = serde_json::to_vec(&generate_scene(&cfg, 42).unwrap()).unwrap();
        let b = serde_json::to_vec(&generate_scene(&cfg, 42).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_vec(&generate_scene(&cfg, 43).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn distribution_covers_counts_and_kinds() {
        let cfg = SceneConfig::default();
        let mut counts = BTreeSet::new();
        let mut kinds = BTreeSet::new();
        for seed in 0..1000 {
            let s = generate_scene(&cfg, seed).unwrap();
            counts.insert(s.n_obs_drawn);
            if let ObjectKind::Subject(k) = s.subject.kind {
                kinds.insert(k);
            }
        }
        assert_eq!(counts, (15..=25).collect());
        assert_eq!(kinds.len(), 7);
    }

    #[test]
    fn invalid_annulus_rejected() {
        let cfg = SceneConfig { annulus: (10.0, 60.0), ..SceneConfig::default() };
        assert!(matches!(generate_scene(&cfg, 0), Err(SceneError::Annulus { .. })));
    }

    #[test]
    fn hsv_primaries() {
        assert_eq!(hsv_to_rgb(0.0, 1.0, 1.0), [1.0, 0.0, 0.0]);
        let g = hsv_to_rgb(1.0 / 3.0, 1.0, 1.0);
        assert!((g[1] - 1.0).abs() < 1e-12 && g[0].abs() < 1e-12);
        assert!((hue_distance(0.95, 0.05) - 0.1).abs() < 1e-12);
    }
}
