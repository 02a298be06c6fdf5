//! Grid detector: every cell of a `G x G` grid owns a linear scorer over its
//! own features, emitting an objectness logit and four box deltas.

use super::{iou, BBox, TraineeError};
use crate::scene::ViewImage;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Mean R, G, B, normalized cell center x and y, bias.
pub const N_FEATURES: usize = 6;
/// Objectness logit plus (dx, dy, log-dw, log-dh).
pub const N_OUTPUTS: usize = 5;
/// Center offsets are clamped to one cell.
pub const OFFSET_CLAMP: f64 = 1.0;
/// Log-size deltas are clamped to this magnitude.
pub const LOG_SIZE_CLAMP: f64 = 2.0;

const CHECKPOINT_MAGIC: [u8; 4] = *b"CDET";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub grid_size: usize,
    pub learning_rate: f64,
    pub detection_threshold: f64,
    pub nms_iou: f64,
    /// Objectness bias of a fresh model.
    pub initial_bias: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { grid_size: 7, learning_rate: 0.05, detection_threshold: 0.3, nms_iou: 0.5, initial_bias: -2.0 }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), TraineeError> {
        if self.grid_size == 0 {
            return Err(TraineeError::Config("grid_size must be positive".into()));
        }
        if !(self.detection_threshold > 0.0 && self.detection_threshold < 1.0) {
            return Err(TraineeError::Config("detection_threshold must lie in (0, 1)".into()));
        }
        if !(self.learning_rate > 0.0) || !(0.0..=1.0).contains(&self.nms_iou) {
            return Err(TraineeError::Config("learning_rate must be positive, nms_iou in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    pub confidence: f64,
}

/// Cell layout and features of one view, computed once and reused by
/// detection, training, and AP evaluation.
///
/// Per cell: mean R, G, B rescaled to [-1, 1], cell center in image-relative
/// coordinates shifted to [-0.5, 0.5], and a constant 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewFeatures {
    pub image_size: usize,
    pub grid_size: usize,
    pub cells: Vec<[f64; N_FEATURES]>,
}

impl ViewFeatures {
    pub fn new(view: &ViewImage, grid_size: usize) -> Self {
        let n = view.size;
        let mut cells = Vec::with_capacity(grid_size * grid_size);
        for gy in 0..grid_size {
            for gx in 0..grid_size {
                let (x0, x1) = cell_span(gx, grid_size, n);
                let (y0, y1) = cell_span(gy, grid_size, n);
                let mut sum = [0.0; 3];
                for y in y0..y1 {
                    for x in x0..x1 {
                        let px = view.rgb(x, y);
                        for c in 0..3 {
                            sum[c] += px[c] as f64;
                        }
                    }
                }
                let count = ((x1 - x0) * (y1 - y0)).max(1) as f64;
                let (cx, cy) = ((x0 + x1) as f64 / 2.0, (y0 + y1) as f64 / 2.0);
                cells.push([
                    sum[0] / count / 127.5 - 1.0,
                    sum[1] / count / 127.5 - 1.0,
                    sum[2] / count / 127.5 - 1.0,
                    cx / n as f64 - 0.5,
                    cy / n as f64 - 0.5,
                    1.0,
                ]);
            }
        }
        Self { image_size: n, grid_size, cells }
    }

    /// Pixel extent of cell `idx` as a box.
    pub fn cell_box(&self, idx: usize) -> BBox {
        let (gx, gy) = (idx % self.grid_size, idx / self.grid_size);
        let (x0, x1) = cell_span(gx, self.grid_size, self.image_size);
        let (y0, y1) = cell_span(gy, self.grid_size, self.image_size);
        BBox::new(x0 as f64, y0 as f64, (x1 - x0) as f64, (y1 - y0) as f64)
    }
}

fn cell_span(i: usize, g: usize, n: usize) -> (usize, usize) {
    (i * n / g, (i + 1) * n / g)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `-log(sigmoid(x))` for label 1 and `-log(1 - sigmoid(x))` for 0.
fn bce_with_logit(x: f64, label: f64) -> f64 {
    x.max(0.0) - x * label + (-x.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub config: DetectorConfig,
    /// `[cell][output][feature]`, flattened.
    pub weights: Vec<f64>,
    /// Number of gradient updates applied so far.
    pub updates: u64,
}

/// Per-cell regression targets and labels for one annotated view.
#[derive(Debug, Clone)]
pub struct TrainingTargets {
    pub positive: Vec<bool>,
    pub deltas: Vec<[f64; 4]>,
}

impl DetectorModel {
    pub fn new(config: DetectorConfig) -> Result<Self, TraineeError> {
        config.validate()?;
        let g2 = config.grid_size * config.grid_size;
        let mut weights = vec![0.0; g2 * N_OUTPUTS * N_FEATURES];
        for cell in 0..g2 {
            weights[Self::index(cell, 0, N_FEATURES - 1)] = config.initial_bias;
        }
        Ok(Self { config, weights, updates: 0 })
    }

    #[inline]
    fn index(cell: usize, out: usize, feat: usize) -> usize {
        (cell * N_OUTPUTS + out) * N_FEATURES + feat
    }

    pub fn features(&self, view: &ViewImage) -> ViewFeatures {
        ViewFeatures::new(view, self.config.grid_size)
    }

    fn check(&self, f: &ViewFeatures) -> Result<(), TraineeError> {
        if f.grid_size != self.config.grid_size {
            return Err(TraineeError::GridMismatch { model: self.config.grid_size, view: f.grid_size });
        }
        Ok(())
    }

    /// Raw outputs of every cell.
    pub fn outputs(&self, f: &ViewFeatures) -> Vec<[f64; N_OUTPUTS]> {
        f.cells
            .iter()
            .enumerate()
            .map(|(cell, x)| {
                let mut o = [0.0; N_OUTPUTS];
                for (k, ok) in o.iter_mut().enumerate() {
                    let w = &self.weights[Self::index(cell, k, 0)..Self::index(cell, k, 0) + N_FEATURES];
                    *ok = w.iter().zip(x).map(|(a, b)| a * b).sum();
                }
                o
            })
            .collect()
    }

    /// Thresholded, NMS-filtered detections sorted by descending confidence.
    pub fn detect_features(&self, f: &ViewFeatures) -> Vec<Detection> {
        let mut candidates: Vec<Detection> = self
            .outputs(f)
            .iter()
            .enumerate()
            .filter_map(|(cell, o)| {
                let confidence = sigmoid(o[0]);
                if confidence < self.config.detection_threshold {
                    return None;
                }
                let c = f.cell_box(cell);
                let (ccx, ccy) = c.center();
                let dx = o[1].clamp(-OFFSET_CLAMP, OFFSET_CLAMP);
                let dy = o[2].clamp(-OFFSET_CLAMP, OFFSET_CLAMP);
                let dw = o[3].clamp(-LOG_SIZE_CLAMP, LOG_SIZE_CLAMP);
                let dh = o[4].clamp(-LOG_SIZE_CLAMP, LOG_SIZE_CLAMP);
                let bbox = BBox::from_center(ccx + dx * c.w, ccy + dy * c.h, c.w * dw.exp(), c.h * dh.exp())
                    .clip(f.image_size)?;
                Some(Detection { bbox, confidence })
            })
            .collect();
        // Stable sort keeps cell order among equal confidences.
        candidates.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
        non_max_suppression(candidates, self.config.nms_iou)
    }

    pub fn detect(&self, view: &ViewImage) -> Vec<Detection> {
        self.detect_features(&self.features(view))
    }

    /// Positive cells are those whose center falls inside `gt`; when none
    /// does, the cell holding the box center is used instead.
    pub fn targets(&self, f: &ViewFeatures, gt: &BBox) -> TrainingTargets {
        let n = f.cells.len();
        let mut positive: Vec<bool> = (0..n)
            .map(|i| {
                let (cx, cy) = f.cell_box(i).center();
                gt.contains_point(cx, cy)
            })
            .collect();
        if !positive.iter().any(|&p| p) {
            let (gcx, gcy) = gt.center();
            let g = f.grid_size;
            let gx = ((gcx / f.image_size as f64 * g as f64) as usize).min(g - 1);
            let gy = ((gcy / f.image_size as f64 * g as f64) as usize).min(g - 1);
            positive[gy * g + gx] = true;
        }
        let (gcx, gcy) = gt.center();
        let deltas = (0..n)
            .map(|i| {
                let c = f.cell_box(i);
                let (ccx, ccy) = c.center();
                [
                    ((gcx - ccx) / c.w).clamp(-OFFSET_CLAMP, OFFSET_CLAMP),
                    ((gcy - ccy) / c.h).clamp(-OFFSET_CLAMP, OFFSET_CLAMP),
                    (gt.w / c.w).ln().clamp(-LOG_SIZE_CLAMP, LOG_SIZE_CLAMP),
                    (gt.h / c.h).ln().clamp(-LOG_SIZE_CLAMP, LOG_SIZE_CLAMP),
                ]
            })
            .collect();
        TrainingTargets { positive, deltas }
    }

    /// Summed logistic objectness loss over all cells plus half the squared
    /// delta error over positive cells.
    pub fn loss(&self, f: &ViewFeatures, targets: &TrainingTargets) -> f64 {
        self.outputs(f)
            .iter()
            .enumerate()
            .map(|(cell, o)| {
                let label = if targets.positive[cell] { 1.0 } else { 0.0 };
                let mut l = bce_with_logit(o[0], label);
                if targets.positive[cell] {
                    for d in 0..4 {
                        let e = o[d + 1] - targets.deltas[cell][d];
                        l += 0.5 * e * e;
                    }
                }
                l
            })
            .sum()
    }

    /// Analytic gradient of [`loss`](Self::loss) with respect to the weights.
    pub fn gradient(&self, f: &ViewFeatures, targets: &TrainingTargets) -> Vec<f64> {
        let mut grad = vec![0.0; self.weights.len()];
        for (cell, o) in self.outputs(f).iter().enumerate() {
            let pos = targets.positive[cell];
            let mut g = [0.0; N_OUTPUTS];
            g[0] = sigmoid(o[0]) - if pos { 1.0 } else { 0.0 };
            if pos {
                for d in 0..4 {
                    g[d + 1] = o[d + 1] - targets.deltas[cell][d];
                }
            }
            for (k, gk) in g.iter().enumerate() {
                for (j, xj) in f.cells[cell].iter().enumerate() {
                    grad[Self::index(cell, k, j)] = gk * xj;
                }
            }
        }
        grad
    }

    /// One plain SGD step on a single annotated view. Returns the updated
    /// model and leaves `self` untouched.
    pub fn training_round_features(&self, f: &ViewFeatures, gt: Option<&BBox>) -> Result<DetectorModel, TraineeError> {
        let gt = gt.ok_or(TraineeError::MissingGroundTruth)?;
        self.check(f)?;
        let targets = self.targets(f, gt);
        let grad = self.gradient(f, &targets);
        let mut next = self.clone();
        let lr = self.config.learning_rate;
        for (w, g) in next.weights.iter_mut().zip(&grad) {
            *w -= lr * g;
        }
        next.updates += 1;
        Ok(next)
    }

    pub fn training_round(&self, view: &ViewImage, gt: Option<&BBox>) -> Result<DetectorModel, TraineeError> {
        self.training_round_features(&self.features(view), gt)
    }

    /// Writes the 16-byte header (magic, version, grid size, feature count)
    /// followed by little-endian weights.
    pub fn save_weights<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&(self.config.grid_size as u32).to_le_bytes())?;
        w.write_all(&(N_FEATURES as u32).to_le_bytes())?;
        for v in &self.weights {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Loads weights into a model with hyperparameters from `config`.
    pub fn load_weights<R: Read>(mut r: R, config: DetectorConfig) -> Result<DetectorModel, TraineeError> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
        if header[..4] != CHECKPOINT_MAGIC || word(4) != CHECKPOINT_VERSION {
            return Err(TraineeError::Checkpoint("bad magic or version".into()));
        }
        if word(8) as usize != config.grid_size || word(12) as usize != N_FEATURES {
            return Err(TraineeError::Checkpoint("grid or feature count mismatch".into()));
        }
        let mut model = DetectorModel::new(config)?;
        let mut buf = [0u8; 8];
        for v in model.weights.iter_mut() {
            r.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
            if !v.is_finite() {
                return Err(TraineeError::Checkpoint("non-finite weight".into()));
            }
        }
        Ok(model)
    }
}

/// Greedy suppression over detections already sorted by confidence.
pub fn non_max_suppression(sorted: Vec<Detection>, max_iou: f64) -> Vec<Detection> {
    let mut kept: Vec<Detection> = Vec::with_capacity(sorted.len());
    for d in sorted {
        if kept.iter().all(|k| iou(&k.bbox, &d.bbox) <= max_iou) {
            kept.push(d);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_view(seed: u64, size: usize) -> ViewImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = ViewImage::new(size);
        v.pixels.iter_mut().for_each(|p| *p = rng.gen());
        v
    }

    #[test]
    fn fresh_model_detects_nothing() {
        let m = DetectorModel::new(DetectorConfig::default()).unwrap();
        assert!((sigmoid(-2.0) - 0.119_202_922).abs() < 1e-8);
        for seed in 0..5 {
            assert!(m.detect(&random_view(seed, 84)).is_empty());
        }
    }

    #[test]
    fn nms_keeps_higher_confidence() {
        let a = Detection { bbox: BBox::new(0.0, 0.0, 10.0, 10.0), confidence: 0.9 };
        let b = Detection { bbox: BBox::new(1.0, 1.0, 10.0, 10.0), confidence: 0.5 };
        let c = Detection { bbox: BBox::new(40.0, 40.0, 5.0, 5.0), confidence: 0.4 };
        assert_eq!(non_max_suppression(vec![a, b, c], 0.5), vec![a, c]);
    }

    #[test]
    fn detections_respect_threshold_and_order() {
        let mut m = DetectorModel::new(DetectorConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        m.weights.iter_mut().for_each(|w| *w = rng.gen_range(-1.5..1.5));
        let dets = m.detect(&random_view(1, 84));
        assert!(!dets.is_empty());
        assert!(dets.iter().all(|d| d.confidence >= 0.3));
        assert!(dets.windows(2).all(|w| w[0].confidence >= w[1].confidence));
        for d in &dets {
            assert!(d.bbox.w >= 1.0 && d.bbox.h >= 1.0 && d.bbox.x >= 0.0 && d.bbox.right() <= 84.0);
        }
    }

    #[test]
    fn training_round_requires_ground_truth_and_counts_updates() {
        let m = DetectorModel::new(DetectorConfig::default()).unwrap();
        let v = random_view(2, 84);
        assert!(matches!(m.training_round(&v, None), Err(TraineeError::MissingGroundTruth)));
        let next = m.training_round(&v, Some(&BBox::new(30.0, 30.0, 20.0, 20.0))).unwrap();
        assert_eq!(next.updates, 1);
        assert_eq!(m.updates, 0);
        assert_ne!(next.weights, m.weights);
    }

    #[test]
    fn loss_non_increasing_on_fixed_pair() {
        let cfg = DetectorConfig { learning_rate: 0.01, ..DetectorConfig::default() };
        let mut m = DetectorModel::new(cfg).unwrap();
        let v = random_view(3, 84);
        let f = m.features(&v);
        let gt = BBox::new(25.0, 31.0, 22.0, 17.0);
        let t = m.targets(&f, &gt);
        let mut prev = m.loss(&f, &t);
        for _ in 0..50 {
            m = m.training_round_features(&f, Some(&gt)).unwrap();
            let l = m.loss(&f, &t);
            assert!(l <= prev, "{l} > {prev}");
            prev = l;
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut m = DetectorModel::new(DetectorConfig { grid_size: 3, ..DetectorConfig::default() }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        m.weights.iter_mut().for_each(|w| *w = rng.gen_range(-1.0..1.0));
        let f = m.features(&random_view(4, 24));
        let t = m.targets(&f, &BBox::new(5.0, 7.0, 9.0, 6.0));
        let g = m.gradient(&f, &t);
        let h = 1e-6;
        for i in 0..m.weights.len() {
            let mut p = m.clone();
            p.weights[i] += h;
            let mut q = m.clone();
            q.weights[i] -= h;
            let fd = (p.loss(&f, &t) - q.loss(&f, &t)) / (2.0 * h);
            let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-8);
            assert!(rel < 1e-6 || (fd - g[i]).abs() < 1e-9, "param {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn small_box_still_gets_a_positive_cell() {
        let m = DetectorModel::new(DetectorConfig::default()).unwrap();
        let f = m.features(&random_view(5, 84));
        let t = m.targets(&f, &BBox::new(1.0, 1.0, 2.0, 2.0));
        assert_eq!(t.positive.iter().filter(|&&p| p).count(), 1);
        assert!(t.positive[0]);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut m = DetectorModel::new(DetectorConfig::default()).unwrap();
        m.weights[17] = 0.25;
        let mut buf = Vec::new();
        m.save_weights(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 8 * m.weights.len());
        let back = DetectorModel::load_weights(&buf[..], DetectorConfig::default()).unwrap();
        assert_eq!(back.weights, m.weights);
        let wrong = DetectorConfig { grid_size: 5, ..DetectorConfig::default() };
        assert!(DetectorModel::load_weights(&buf[..], wrong).is_err());
    }
}
