//! Solid primitives, their ray intersections, and the subject/obstruction
//! catalogue built from them.

use crate::math::Vec3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Primitive {
    /// Axis-aligned box in the object frame.
    Box { center: Vec3, half: Vec3 },
    Sphere { center: Vec3, radius: f64 },
    /// Upright cylinder standing on `base`.
    Cylinder { base: Vec3, radius: f64, height: f64 },
}

/// Nearest positive hit along `origin + t * dir`; `dir` need not be unit length.
#[derive(Debug, Clone, Copy)]
pub struct LocalHit {
    pub t: f64,
    pub normal: Vec3,
}

const EPS: f64 = 1e-9;

impl Primitive {
    pub fn intersect(&self, origin: Vec3, dir: Vec3) -> Option<LocalHit> {
        match *self {
            Primitive::Box { center, half } => intersect_box(origin - center, dir, half),
            Primitive::Sphere { center, radius } => intersect_sphere(origin - center, dir, radius),
            Primitive::Cylinder { base, radius, height } => {
                intersect_cylinder(origin - base, dir, radius, height)
            }
        }
    }

    /// Highest point in the object frame.
    pub fn top(&self) -> f64 {
        match *self {
            Primitive::Box { center, half } => center.z + half.z,
            Primitive::Sphere { center, radius } => center.z + radius,
            Primitive::Cylinder { base, height, .. } => base.z + height,
        }
    }

    /// Horizontal half-extents of the primitive's bounding rectangle measured
    /// from the object origin.
    pub fn horizontal_reach(&self) -> (f64, f64) {
        match *self {
            Primitive::Box { center, half } => (center.x.abs() + half.x, center.y.abs() + half.y),
            Primitive::Sphere { center, radius } => {
                (center.x.abs() + radius, center.y.abs() + radius)
            }
            Primitive::Cylinder { base, radius, .. } => {
                (base.x.abs() + radius, base.y.abs() + radius)
            }
        }
    }

    /// Furthest distance of any point of the primitive from the object origin.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Primitive::Box { center, half } => {
                Vec3::new(center.x.abs() + half.x, center.y.abs() + half.y, center.z.abs() + half.z)
                    .norm()
            }
            Primitive::Sphere { center, radius } => center.norm() + radius,
            Primitive::Cylinder { base, radius, height } => {
                let r = (base.x * base.x + base.y * base.y).sqrt() + radius;
                let z = base.z.abs().max((base.z + height).abs());
                (r * r + z * z).sqrt()
            }
        }
    }
}

fn intersect_box(o: Vec3, d: Vec3, half: Vec3) -> Option<LocalHit> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    let mut axis_near = 0;
    let (oa, da, ha) = ([o.x, o.y, o.z], [d.x, d.y, d.z], [half.x, half.y, half.z]);
    for a in 0..3 {
        if da[a].abs() < 1e-15 {
            if oa[a].abs() > ha[a] {
                return None;
            }
            continue;
        }
        let t1 = (-ha[a] - oa[a]) / da[a];
        let t2 = (ha[a] - oa[a]) / da[a];
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        if lo > t_near {
            t_near = lo;
            axis_near = a;
        }
        t_far = t_far.min(hi);
        if t_near > t_far {
            return None;
        }
    }
    if t_near <= EPS {
        // Origin inside the box or box behind the ray.
        return None;
    }
    let mut n = [0.0; 3];
    n[axis_near] = -da[axis_near].signum();
    Some(LocalHit { t: t_near, normal: Vec3::new(n[0], n[1], n[2]) })
}

fn intersect_sphere(o: Vec3, d: Vec3, r: f64) -> Option<LocalHit> {
    let a = d.dot(d);
    let b = o.dot(d);
    let c = o.dot(o) - r * r;
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let t = (-b - disc.sqrt()) / a;
    if t <= EPS {
        return None;
    }
    Some(LocalHit { t, normal: (o + d * t) / r })
}

fn intersect_cylinder(o: Vec3, d: Vec3, r: f64, h: f64) -> Option<LocalHit> {
    let mut best: Option<LocalHit> = None;
    let mut take = |hit: LocalHit| {
        if hit.t > EPS && best.map_or(true, |b| hit.t < b.t) {
            best = Some(hit);
        }
    };
    // Side wall.
    let a = d.x * d.x + d.y * d.y;
    if a > 1e-15 {
        let b = o.x * d.x + o.y * d.y;
        let c = o.x * o.x + o.y * o.y - r * r;
        let disc = b * b - a * c;
        if disc >= 0.0 {
            let t = (-b - disc.sqrt()) / a;
            let z = o.z + d.z * t;
            if (0.0..=h).contains(&z) {
                let p = o + d * t;
                take(LocalHit { t, normal: Vec3::new(p.x / r, p.y / r, 0.0) });
            }
        }
    }
    // Caps.
    if d.z.abs() > 1e-15 {
        for (z, nz) in [(h, 1.0), (0.0, -1.0)] {
            let t = (z - o.z) / d.z;
            let p = o + d * t;
            if p.x * p.x + p.y * p.y <= r * r && d.z * nz < 0.0 {
                take(LocalHit { t, normal: Vec3::new(0.0, 0.0, nz) });
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubjectKind {
    Cube,
    Train,
    Plane,
    Ship,
    Sphere,
    Car,
    Capsule,
}

impl SubjectKind {
    pub const ALL: [SubjectKind; 7] = [
        SubjectKind::Cube,
        SubjectKind::Train,
        SubjectKind::Plane,
        SubjectKind::Ship,
        SubjectKind::Sphere,
        SubjectKind::Car,
        SubjectKind::Capsule,
    ];

    pub fn primitives(self) -> Vec<Primitive> {
        use Primitive::*;
        let v = Vec3::new;
        match self {
            SubjectKind::Cube => vec![Box { center: v(0.0, 0.0, 4.0), half: v(4.0, 4.0, 4.0) }],
            SubjectKind::Sphere => vec![Sphere { center: v(0.0, 0.0, 5.0), radius: 5.0 }],
            SubjectKind::Car => vec![
                Box { center: v(0.0, 0.0, 1.5), half: v(5.0, 2.2, 1.5) },
                Box { center: v(-0.5, 0.0, 4.2), half: v(2.5, 2.0, 1.2) },
            ],
            SubjectKind::Train => (-1..=1)
                .map(|i| Box { center: v(7.6 * i as f64, 0.0, 2.0), half: v(3.5, 1.6, 2.0) })
                .collect(),
            SubjectKind::Plane => vec![
                Box { center: v(0.0, 0.0, 2.0), half: v(7.0, 1.2, 1.2) },
                Box { center: v(0.5, 4.7, 2.0), half: v(1.5, 3.5, 0.25) },
                Box { center: v(0.5, -4.7, 2.0), half: v(1.5, 3.5, 0.25) },
                Box { center: v(-6.0, 0.0, 4.2), half: v(1.0, 0.2, 1.6) },
            ],
            SubjectKind::Ship => vec![
                Box { center: v(0.0, 0.0, 1.5), half: v(10.0, 2.5, 1.5) },
                Box { center: v(-2.0, 0.0, 5.5), half: v(3.0, 2.0, 2.5) },
            ],
            SubjectKind::Capsule => vec![
                Cylinder { base: v(0.0, 0.0, 2.5), radius: 2.5, height: 8.0 },
                Sphere { center: v(0.0, 0.0, 2.5), radius: 2.5 },
                Sphere { center: v(0.0, 0.0, 10.5), radius: 2.5 },
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstructionKind {
    Box,
    TallBox,
    FlatBox,
    Cylinder,
    TallCylinder,
    Sphere,
    Hemisphere,
    LShape,
}

impl ObstructionKind {
    pub const ALL: [ObstructionKind; 8] = [
        ObstructionKind::Box,
        ObstructionKind::TallBox,
        ObstructionKind::FlatBox,
        ObstructionKind::Cylinder,
        ObstructionKind::TallCylinder,
        ObstructionKind::Sphere,
        ObstructionKind::Hemisphere,
        ObstructionKind::LShape,
    ];

    pub fn primitives(self) -> Vec<Primitive> {
        use Primitive as P;
        let v = Vec3::new;
        match self {
            ObstructionKind::Box => vec![P::Box { center: v(0.0, 0.0, 3.0), half: v(3.0, 3.0, 3.0) }],
            ObstructionKind::TallBox => {
                vec![P::Box { center: v(0.0, 0.0, 7.0), half: v(2.0, 2.0, 7.0) }]
            }
            ObstructionKind::FlatBox => {
                vec![P::Box { center: v(0.0, 0.0, 1.0), half: v(5.0, 5.0, 1.0) }]
            }
            ObstructionKind::Cylinder => {
                vec![P::Cylinder { base: Vec3::ZERO, radius: 3.0, height: 6.0 }]
            }
            ObstructionKind::TallCylinder => {
                vec![P::Cylinder { base: Vec3::ZERO, radius: 1.5, height: 12.0 }]
            }
            ObstructionKind::Sphere => vec![P::Sphere { center: v(0.0, 0.0, 3.0), radius: 3.0 }],
            // Centered on the ground: the lower half is never visible from above.
            ObstructionKind::Hemisphere => vec![P::Sphere { center: Vec3::ZERO, radius: 4.0 }],
            ObstructionKind::LShape => vec![
                P::Box { center: v(0.0, 0.0, 2.5), half: v(4.0, 1.5, 2.5) },
                P::Box { center: v(2.5, 3.5, 2.5), half: v(1.5, 2.0, 2.5) },
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_hit_from_above() {
        let b = Primitive::Box { center: Vec3::new(0.0, 0.0, 1.0), half: Vec3::new(1.0, 1.0, 1.0) };
        let hit = b.intersect(Vec3::new(0.0, 0.0, 10.0), Vec3::new(0.0, 0.0, -2.0)).unwrap();
        assert!((hit.t - 4.0).abs() < 1e-12);
        assert_eq!(hit.normal, Vec3::new(0.0, 0.0, 1.0));
        assert!(b.intersect(Vec3::new(5.0, 0.0, 10.0), Vec3::new(0.0, 0.0, -1.0)).is_none());
    }

    #[test]
    fn sphere_hit_distance() {
        let s = Primitive::Sphere { center: Vec3::ZERO, radius: 2.0 };
        let hit = s.intersect(Vec3::new(10.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0)).unwrap();
        assert!((hit.t - 8.0).abs() < 1e-12);
        assert!((hit.normal.x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cylinder_side_and_cap() {
        let c = Primitive::Cylinder { base: Vec3::ZERO, radius: 1.0, height: 4.0 };
        let side = c.intersect(Vec3::new(5.0, 0.0, 2.0), Vec3::new(-1.0, 0.0, 0.0)).unwrap();
        assert!((side.t - 4.0).abs() < 1e-12);
        let cap = c.intersect(Vec3::new(0.2, 0.0, 9.0), Vec3::new(0.0, 0.0, -1.0)).unwrap();
        assert!((cap.t - 5.0).abs() < 1e-12);
        assert_eq!(cap.normal, Vec3::new(0.0, 0.0, 1.0));
        assert!(c.intersect(Vec3::new(5.0, 0.0, 5.0), Vec3::new(-1.0, 0.0, 0.0)).is_none());
    }

    #[test]
    fn catalogue_sizes() {
        assert_eq!(SubjectKind::ALL.len(), 7);
        assert_eq!(ObstructionKind::ALL.len(), 8);
        for k in SubjectKind::ALL {
            assert!(!k.primitives().is_empty());
        }
    }
}
