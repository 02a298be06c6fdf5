use crate::orbit::{DerivedGeometry, GridPosition};
use crate::scene::ViewImage;
use crate::trainee::{BBox, Detection};

pub const CHANNELS: usize = 5;
/// Channel holding the tracked or annotated box.
pub const TRACK_CHANNEL: usize = 3;
/// Channel holding confidence-weighted detections.
pub const DETECTION_CHANNEL: usize = 4;

/// Matrix state (`size x size x 5`, pixel-major) plus normalized position.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentObservation {
    pub size: usize,
    pub matrix: Vec<u8>,
    pub position: (f64, f64),
}

impl AgentObservation {
    pub fn at(&self, x: usize, y: usize, c: usize) -> u8 {
        self.matrix[(y * self.size + x) * CHANNELS + c]
    }

    /// Channel-major floats in [0, 1] for the network input.
    pub fn to_planes(&self) -> Vec<f64> {
        let n = self.size * self.size;
        let mut out = vec![0.0; n * CHANNELS];
        for p in 0..n {
            for c in 0..CHANNELS {
                out[c * n + p] = self.matrix[p * CHANNELS + c] as f64 / 255.0;
            }
        }
        out
    }
}

/// Pixels whose centers lie inside `b`, as half-open ranges.
fn covered(b: &BBox, size: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let lo = |v: f64| ((v - 0.5).ceil().max(0.0) as usize).min(size);
    (lo(b.x)..lo(b.right()), lo(b.y)..lo(b.bottom()))
}

pub fn encode_observation(
    view: &ViewImage,
    tracked: Option<&BBox>,
    detections: &[Detection],
    pos: GridPosition,
    geom: &DerivedGeometry,
) -> AgentObservation {
    let n = view.size;
    let mut matrix = vec![0u8; n * n * CHANNELS];
    for p in 0..n * n {
        matrix[p * CHANNELS..p * CHANNELS + 3].copy_from_slice(&view.pixels[p * 3..p * 3 + 3]);
    }
    let mut fill = |b: &BBox, c: usize, value: u8| {
        let (xs, ys) = covered(b, n);
        for y in ys {
            for x in xs.clone() {
                matrix[(y * n + x) * CHANNELS + c] = value;
            }
        }
    };
    if let Some(b) = tracked {
        fill(b, TRACK_CHANNEL, 255);
    }
    // Lowest confidence first so stronger boxes cover weaker ones.
    let mut order: Vec<&Detection> = detections.iter().collect();
    order.sort_by(|a, b| a.confidence.total_cmp(&b.confidence));
    for d in order {
        fill(&d.bbox, DETECTION_CHANNEL, (255.0 * d.confidence).round() as u8);
    }
    AgentObservation { size: n, matrix, position: geom.normalized_position(pos) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::{derive_geometry, OrbitSpaceConfig};

    fn geom() -> DerivedGeometry {
        derive_geometry(OrbitSpaceConfig::default()).unwrap()
    }

    fn det(x: f64, c: f64) -> Detection {
        Detection { bbox: BBox::new(x, 10.0, 10.0, 10.0), confidence: c }
    }

    #[test]
    fn detection_intensity_and_overlap_order() {
        let v = ViewImage::filled(32, [1, 2, 3]);
        let g = geom();
        let o = encode_observation(&v, None, &[det(0.0, 0.6)], GridPosition::new(6, 0), &g);
        assert_eq!(o.at(5, 15, DETECTION_CHANNEL), 153);
        // Higher confidence listed first still ends up on top.
        let o = encode_observation(&v, None, &[det(5.0, 0.9), det(0.0, 0.4)], GridPosition::new(6, 0), &g);
        assert_eq!(o.at(7, 15, DETECTION_CHANNEL), 230);
        assert_eq!(o.at(2, 15, DETECTION_CHANNEL), 102);
    }

    #[test]
    fn empty_trainee_channels_are_zero() {
        let v = ViewImage::filled(16, [9, 9, 9]);
        let o = encode_observation(&v, None, &[], GridPosition::new(3, 15), &geom());
        for y in 0..16 {
            for x in 0..16 {
                assert_eq!(o.at(x, y, TRACK_CHANNEL), 0);
                assert_eq!(o.at(x, y, DETECTION_CHANNEL), 0);
                assert_eq!(o.at(x, y, 0), 9);
            }
        }
        assert_eq!(o.position, (0.5, 0.5));
    }

    #[test]
    fn tracked_box_fills_channel() {
        let v = ViewImage::filled(16, [0, 0, 0]);
        let b = BBox::new(2.0, 3.0, 4.0, 5.0);
        let o = encode_observation(&v, Some(&b), &[], GridPosition::new(6, 0), &geom());
        let count = (0..16 * 16).filter(|p| o.matrix[p * CHANNELS + TRACK_CHANNEL] == 255).count();
        assert_eq!(count, 20);
        assert!(o.matrix.chunks(CHANNELS).all(|px| px[TRACK_CHANNEL] == 0 || px[TRACK_CHANNEL] == 255));
    }
}
