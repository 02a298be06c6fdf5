//! Per-pixel ray casting against the scene's analytic primitives.

use super::{GroundTruth, Scene, SceneConfig, SceneObject, ViewImage};
use crate::math::Vec3;
use crate::orbit::CameraPose;
use crate::trainee::BBox;

const SKY: [u8; 3] = [172, 200, 228];
const GROUND: [u8; 3] = [104, 116, 92];
const AMBIENT: f64 = 0.35;
const DIFFUSE: f64 = 0.65;
const LIGHT_AZIMUTH_DEG: f64 = 45.0;
const LIGHT_ELEVATION_DEG: f64 = 50.0;

/// Pinhole camera with a square frustum and +z as world up.
#[derive(Debug, Clone, Copy)]
pub struct Camera {
    pub origin: Vec3,
    pub forward: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    /// tan(fov / 2)
    pub half_extent: f64,
    pub size: usize,
}

impl Camera {
    pub fn new(pose: &CameraPose, fov_deg: f64, size: usize) -> Self {
        let forward = (pose.look_at - pose.position).normalized();
        let right = forward.cross(Vec3::new(0.0, 0.0, 1.0)).normalized();
        let up = right.cross(forward);
        Self {
            origin: pose.position,
            forward,
            right,
            up,
            half_extent: (fov_deg.to_radians() / 2.0).tan(),
            size,
        }
    }

    /// Unnormalized direction through the center of pixel (`px`, `py`).
    pub fn ray(&self, px: usize, py: usize) -> Vec3 {
        let n = self.size as f64;
        let u = (2.0 * (px as f64 + 0.5) / n - 1.0) * self.half_extent;
        let v = (1.0 - 2.0 * (py as f64 + 0.5) / n) * self.half_extent;
        self.forward + self.right * u + self.up * v
    }

    /// Continuous pixel coordinates of a world point (pixel centers sit at
    /// half-integers), or `None` behind the camera.
    pub fn project(&self, p: Vec3) -> Option<(f64, f64)> {
        let d = p - self.origin;
        let z = d.dot(self.forward);
        if z <= 0.0 {
            return None;
        }
        let n = self.size as f64;
        let u = d.dot(self.right) / z / self.half_extent;
        let v = d.dot(self.up) / z / self.half_extent;
        Some(((u + 1.0) * n / 2.0, (1.0 - v) * n / 2.0))
    }
}

struct Placed<'a> {
    object: &'a SceneObject,
    origin: Vec3,
    yaw: f64,
    bound: f64,
}

impl<'a> Placed<'a> {
    fn new(object: &'a SceneObject) -> Self {
        Self { object, origin: object.origin(), yaw: object.yaw.to_radians(), bound: object.bounding_radius() }
    }

    /// Nearest hit distance and world-space unit normal.
    fn intersect(&self, origin: Vec3, dir: Vec3, t_max: f64) -> Option<(f64, Vec3)> {
        // Bounding-sphere rejection.
        let oc = origin - self.origin;
        let a = dir.dot(dir);
        let b = oc.dot(dir);
        let c = oc.dot(oc) - self.bound * self.bound;
        if c > 0.0 && (b > 0.0 || b * b - a * c < 0.0) {
            return None;
        }
        let s = self.object.scale;
        let o_l = oc.rotate_z(-self.yaw).div_elem(s);
        let d_l = dir.rotate_z(-self.yaw).div_elem(s);
        let mut best: Option<(f64, Vec3)> = None;
        for p in &self.object.primitives {
            if let Some(hit) = p.intersect(o_l, d_l) {
                if hit.t < t_max && best.map_or(true, |(t, _)| hit.t < t)
                {
                    best = Some((hit.t, hit.normal));
                }
            }
        }
        best.map(|(t, n)| (t, n.div_elem(s).rotate_z(self.yaw).normalized()))
    }
}

fn ground_t(origin: Vec3, dir: Vec3) -> f64 {
    if dir.z < 0.0 {
        -origin.z / dir.z
    } else {
        f64::INFINITY
    }
}

fn shade(rgb: [f64; 3], normal: Vec3, light: Vec3) -> [u8; 3] {
    let k = AMBIENT + DIFFUSE * normal.dot(light).max(0.0);
    rgb.map(|c| (c * k * 255.0).round().clamp(0.0, 255.0) as u8)
}

fn light_direction() -> Vec3 {
    let (az, el) = (LIGHT_AZIMUTH_DEG.to_radians(), LIGHT_ELEVATION_DEG.to_radians());
    Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin())
}

/// Renders the view and its ground-truth annotation in one pass.
pub fn render_frame(scene: &Scene, pose: &CameraPose, config: &SceneConfig) -> (ViewImage, GroundTruth) {
    let cam = Camera::new(pose, config.fov, config.image_size);
    let light = light_direction();
    let placed: Vec<Placed> = scene.objects().map(Placed::new).collect();
    let n = config.image_size;
    let mut image = ViewImage::new(n);

    let mut visible = 0usize;
    let mut unoccluded = 0usize;
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0usize, 0usize);

    for py in 0..n {
        for px in 0..n {
            let dir = cam.ray(px, py);
            let t_ground = ground_t(cam.origin, dir);
            let mut nearest: Option<(usize, f64, Vec3)> = None;
            let mut t_max = t_ground;
            for (i, obj) in placed.iter().enumerate() {
                if let Some((t, normal)) = obj.intersect(cam.origin, dir, t_max) {
                    t_max = t;
                    nearest = Some((i, t, normal));
                }
            }
            let rgb = match nearest {
                Some((i, _, normal)) => shade(placed[i].object.rgb(), normal, light),
                None if t_ground.is_finite() => GROUND,
                None => SKY,
            };
            image.set_rgb(px, py, rgb);

            let subject_hit = matches!(nearest, Some((0, _, _)));
            if subject_hit {
                visible += 1;
                x0 = x0.min(px);
                y0 = y0.min(py);
                x1 = x1.max(px);
                y1 = y1.max(py);
            }
            if subject_hit || placed[0].intersect(cam.origin, dir, t_ground).is_some() {
                unoccluded += 1;
            }
        }
    }

    let bbox = (visible > 0).then(|| {
        BBox::new(x0 as f64, y0 as f64, (x1 - x0 + 1) as f64, (y1 - y0 + 1) as f64)
    });
    let visible_fraction = if unoccluded == 0 { 0.0 } else { visible as f64 / unoccluded as f64 };
    (image, GroundTruth { bbox, visible_fraction })
}

pub fn render_view(scene: &Scene, pose: &CameraPose, config: &SceneConfig) -> ViewImage {
    render_frame(scene, pose, config).0
}

/// Tight box around the visible subject pixels, `None` when fully hidden.
pub fn ground_truth_bbox(scene: &Scene, pose: &CameraPose, config: &SceneConfig) -> GroundTruth {
    render_frame(scene, pose, config).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::{derive_geometry, GridPosition, OrbitSpaceConfig};
    use crate::scene::{generate_scene, ObjectKind, ObstructionKind, SubjectKind};

    fn lone_subject(kind: SubjectKind) -> Scene {
        let cfg = SceneConfig { subject_kinds: vec![kind], n_obs_range: (0, 0), ..SceneConfig::default() };
        let mut s = generate_scene(&cfg, 3).unwrap();
        s.confusors.clear();
        s.aim_offset = (0.0, 0.0);
        s
    }

    fn outer_pose(j: usize) -> CameraPose {
        let g = derive_geometry(OrbitSpaceConfig::default()).unwrap();
        g.camera_pose(GridPosition::new(6, j), Vec3::ZERO)
    }

    #[test]
    fn lone_subject_is_centered() {
        let cfg = SceneConfig::default();
        let scene = lone_subject(SubjectKind::Cube);
        let gt = ground_truth_bbox(&scene, &outer_pose(0), &cfg);
        let b = gt.bbox.unwrap();
        let n = cfg.image_size as f64;
        assert!(b.x > n * 0.25 && b.x + b.w < n * 0.75);
        assert!(b.y > n * 0.2 && b.y + b.h < n * 0.8);
        assert_eq!(gt.visible_fraction, 1.0);
    }

    #[test]
    fn sphere_box_center_matches_projection() {
        let cfg = SceneConfig::default();
        let scene = lone_subject(SubjectKind::Sphere);
        for j in [0, 7, 19] {
            let pose = outer_pose(j);
            let b = ground_truth_bbox(&scene, &pose, &cfg).bbox.unwrap();
            let cam = Camera::new(&pose, cfg.fov, cfg.image_size);
            let (u, v) = cam.project(Vec3::new(0.0, 0.0, 5.0)).unwrap();
            let (cx, cy) = (b.x + b.w / 2.0, b.y + b.h / 2.0);
            assert!((cx - u).abs() <= 1.0 && (cy - v).abs() <= 1.0, "{cx},{cy} vs {u},{v}");
        }
    }

    #[test]
    fn full_occlusion_yields_no_box() {
        let cfg = SceneConfig::default();
        let mut scene = lone_subject(SubjectKind::Cube);
        let pose = outer_pose(0);
        // A wall between the camera and the subject.
        let mut wall = scene.subject.clone();
        wall.kind = ObjectKind::Obstruction(ObstructionKind::Box);
        wall.primitives = vec![crate::scene::Primitive::Box {
            center: Vec3::new(0.0, 0.0, 14.0),
            half: Vec3::new(0.5, 25.0, 14.0),
        }];
        wall.position = (20.0, 0.0);
        wall.yaw = 0.0;
        scene.obstructions.push(wall);
        let gt = ground_truth_bbox(&scene, &pose, &cfg);
        assert_eq!(gt.bbox, None);
        assert_eq!(gt.visible_fraction, 0.0);
    }

    #[test]
    fn off_center_subject_box_is_clipped() {
        let cfg = SceneConfig::default();
        let mut scene = lone_subject(SubjectKind::Ship);
        scene.aim_offset = (0.0, 21.0);
        let g = derive_geometry(OrbitSpaceConfig::default()).unwrap();
        let pose = g.camera_pose(GridPosition::new(6, 0), scene.aim_point());
        let gt = ground_truth_bbox(&scene, &pose, &cfg);
        let b = gt.bbox.unwrap();
        assert!(b.x >= 0.0 && b.y >= 0.0);
        assert!(b.x + b.w <= cfg.image_size as f64 && b.y + b.h <= cfg.image_size as f64);
        assert!(b.x == 0.0 || b.x + b.w == cfg.image_size as f64);
    }

    #[test]
    fn rendering_is_deterministic_and_hue_only_changes_pixels() {
        let cfg = SceneConfig::default();
        let scene = generate_scene(&cfg, 11).unwrap();
        let pose = outer_pose(4);
        let (a, ga) = render_frame(&scene, &pose, &cfg);
        let (b, gb) = render_frame(&scene, &pose, &cfg);
        assert_eq!(a, b);
        assert_eq!(ga, gb);
        let recolored = scene.with_subject_hue(scene.subject.hue + 0.5);
        let (c, gc) = render_frame(&recolored, &pose, &cfg);
        assert_eq!(ga.bbox, gc.bbox);
        if ga.bbox.is_some() {
            assert_ne!(a, c);
        }
    }

    #[test]
    fn projection_inverts_ray() {
        let cfg = SceneConfig::default();
        let cam = Camera::new(&outer_pose(3), cfg.fov, cfg.image_size);
        let p = cam.origin + cam.ray(10, 60) * 37.0;
        let (u, v) = cam.project(p).unwrap();
        assert!((u - 10.5).abs() < 1e-9 && (v - 60.5).abs() < 1e-9);
    }
}
