use serde::{Deserialize, Serialize};

/// Axis-aligned pixel box; (`x`, `y`) is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn contains_point(&self, px: f64, py: f64) -> bool {
        px >= self.x && px < self.right() && py >= self.y && py < self.bottom()
    }

    /// Intersection with `[0, size)²`; `None` if less than one pixel remains
    /// along either axis.
    pub fn clip(&self, size: usize) -> Option<BBox> {
        let s = size as f64;
        let x0 = self.x.max(0.0);
        let y0 = self.y.max(0.0);
        let x1 = self.right().min(s);
        let y1 = self.bottom().min(s);
        (x1 - x0 >= 1.0 && y1 - y0 >= 1.0).then(|| BBox::new(x0, y0, x1 - x0, y1 - y0))
    }

    /// Integer pixel span `[x0, x1) x [y0, y1)` covered by the box.
    pub fn pixel_span(&self, size: usize) -> (usize, usize, usize, usize) {
        let clamp = |v: f64| (v.max(0.0) as usize).min(size);
        (
            clamp(self.x.floor()),
            clamp(self.y.floor()),
            clamp(self.right().ceil()),
            clamp(self.bottom().ceil()),
        )
    }
}

/// Intersection over union, in [0, 1].
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.right().min(b.right()) - a.x.max(b.x)).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn iou_examples() {
        let a = BBox::new(0.0, 0.0, 2.0, 2.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &BBox::new(5.0, 5.0, 1.0, 1.0)), 0.0);
        assert!((iou(&a, &BBox::new(1.0, 1.0, 2.0, 2.0)) - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn clipping() {
        assert_eq!(BBox::new(-3.0, 2.0, 5.0, 4.0).clip(10), Some(BBox::new(0.0, 2.0, 2.0, 4.0)));
        assert_eq!(BBox::new(9.5, 2.0, 5.0, 4.0).clip(10), None);
    }

    proptest! {
        #[test]
        fn iou_is_bounded_and_symmetric(
            a in (0.0..50.0f64, 0.0..50.0f64, 1.0..30.0f64, 1.0..30.0f64),
            b in (0.0..50.0f64, 0.0..50.0f64, 1.0..30.0f64, 1.0..30.0f64),
        ) {
            let a = BBox::new(a.0, a.1, a.2, a.3);
            let b = BBox::new(b.0, b.1, b.2, b.3);
            let v = iou(&a, &b);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v, iou(&b, &a));
        }
    }
}
