//! Single-scale template tracker scored by normalized cross-correlation.

use super::{BBox, TraineeError};
use crate::scene::ViewImage;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Side of the resampled template, pixels.
    pub template_size: usize,
    /// Search margin on each side, as a fraction of the box extent.
    pub margin: f64,
    /// Minimum confidence to keep tracking.
    pub confidence_threshold: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self { template_size: 16, margin: 0.25, confidence_threshold: 0.6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerState {
    pub template: Vec<f64>,
    pub last_bbox: BBox,
    pub config: TrackerConfig,
}

/// Samples the `w x h` patch at integer top-left (`x`, `y`) onto a `t x t`
/// grid of intensities (nearest neighbour).
fn resample(view: &ViewImage, x: usize, y: usize, w: usize, h: usize, t: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(t * t);
    for v in 0..t {
        let sy = y + ((v * 2 + 1) * h / (2 * t)).min(h - 1);
        for u in 0..t {
            let sx = x + ((u * 2 + 1) * w / (2 * t)).min(w - 1);
            out.push(view.intensity(sx, sy));
        }
    }
    out
}

/// Zero-mean normalized cross-correlation; 0 when either side is flat.
pub fn ncc(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va <= 1e-12 || vb <= 1e-12 {
        return 0.0;
    }
    cov / (va.sqrt() * vb.sqrt())
}

fn integer_box(b: &BBox, size: usize) -> Option<(usize, usize, usize, usize)> {
    let (x0, y0, x1, y1) = b.pixel_span(size);
    (x1 > x0 && y1 > y0).then(|| (x0, y0, x1 - x0, y1 - y0))
}

/// Crops `gt`, resamples it to the template grid, and starts tracking there.
pub fn init_tracker(view: &ViewImage, gt: &BBox, config: &TrackerConfig) -> Result<TrackerState, TraineeError> {
    if gt.w < 2.0 || gt.h < 2.0 {
        return Err(TraineeError::DegenerateBox(*gt));
    }
    let (x, y, w, h) = integer_box(gt, view.size).ok_or(TraineeError::DegenerateBox(*gt))?;
    if w < 2 || h < 2 {
        return Err(TraineeError::DegenerateBox(*gt));
    }
    Ok(TrackerState {
        template: resample(view, x, y, w, h, config.template_size),
        last_bbox: BBox::new(x as f64, y as f64, w as f64, h as f64),
        config: config.clone(),
    })
}

impl TrackerState {
    /// Best match in the search window: (confidence in [0, 1], box).
    pub fn search(&self, view: &ViewImage) -> (f64, BBox) {
        let b = self.last_bbox;
        let (w, h) = (b.w as usize, b.h as usize);
        let n = view.size;
        let t = self.config.template_size;
        let mx = (self.config.margin * b.w).round() as i64;
        let my = (self.config.margin * b.h).round() as i64;
        let (bx, by) = (b.x as i64, b.y as i64);
        let mut best = (f64::NEG_INFINITY, b);
        if w > n || h > n {
            return (0.0, b);
        }
        // Scan outward from the previous position so ties keep the box still.
        let mut offsets: Vec<(i64, i64)> =
            (-my..=my).flat_map(|dy| (-mx..=mx).map(move |dx| (dx, dy))).collect();
        offsets.sort_by_key(|&(dx, dy)| (dx.abs() + dy.abs(), dy, dx));
        for (dx, dy) in offsets {
            let (x, y) = (bx + dx, by + dy);
            if x < 0 || y < 0 || x as usize + w > n || y as usize + h > n {
                continue;
            }
            let patch = resample(view, x as usize, y as usize, w, h, t);
            let score = ncc(&self.template, &patch);
            if score > best.0 {
                best = (score, BBox::new(x as f64, y as f64, b.w, b.h));
            }
        }
        (best.0.clamp(0.0, 1.0), best.1)
    }
}
