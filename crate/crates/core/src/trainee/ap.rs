//! Single-class average precision at IoU >= 0.5 with all-points
//! interpolation. Detections sharing a confidence form one threshold, so the
//! result does not depend on the order of tied detections or of the views.

use super::{iou, BBox, Detection};

pub const MATCH_IOU: f64 = 0.5;

/// `detections[v]` are the detections on view `v`, whose (single) ground
/// truth is `truths[v]`. Returns 0 when no view has a ground truth.
pub fn average_precision(detections: &[Vec<Detection>], truths: &[Option<BBox>]) -> f64 {
    assert_eq!(detections.len(), truths.len());
    let n_pos = truths.iter().filter(|t| t.is_some()).count();
    if n_pos == 0 {
        return 0.0;
    }
    let mut pooled: Vec<(f64, usize, &BBox)> = detections
        .iter()
        .enumerate()
        .flat_map(|(v, ds)| ds.iter().map(move |d| (d.confidence, v, &d.bbox)))
        .collect();
    pooled.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut matched = vec![false; truths.len()];
    let (mut tp, mut fp) = (0usize, 0usize);
    // (recall, precision) at each distinct confidence threshold.
    let mut curve: Vec<(f64, f64)> = Vec::new();
    for (i, &(conf, v, bbox)) in pooled.iter().enumerate() {
        let hit = match truths[v] {
            Some(ref gt) if !matched[v] && iou(bbox, gt) >= MATCH_IOU => {
                matched[v] = true;
                true
            }
            _ => false,
        };
        if hit {
            tp += 1;
        } else {
            fp += 1;
        }
        let group_ends = pooled.get(i + 1).map_or(true, |next| next.0 != conf);
        if group_ends {
            curve.push((tp as f64 / n_pos as f64, tp as f64 / (tp + fp) as f64));
        }
    }
    area_under_interpolated(&curve)
}

/// Sum over recall steps of the step width times the best precision at any
/// recall at least as large.
fn area_under_interpolated(curve: &[(f64, f64)]) -> f64 {
    let mut envelope = vec![0.0; curve.len()];
    let mut best: f64 = 0.0;
    for i in (0..curve.len()).rev() {
        best = best.max(curve[i].1);
        envelope[i] = best;
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (i, &(recall, _)) in curve.iter().enumerate() {
        if recall > prev_recall {
            ap += (recall - prev_recall) * envelope[i];
            prev_recall = recall;
        }
    }
    ap
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(x: f64, c: f64) -> Detection {
        Detection { bbox: BBox::new(x, 0.0, 10.0, 10.0), confidence: c }
    }

    #[test]
    fn perfect_single_detection() {
        let gt = Some(BBox::new(0.0, 0.0, 10.0, 10.0));
        assert_eq!(average_precision(&[vec![det(1.0, 0.9)]], &[gt]), 1.0);
    }

    #[test]
    fn no_detections_is_zero() {
        let gt = Some(BBox::new(0.0, 0.0, 10.0, 10.0));
        assert_eq!(average_precision(&[vec![], vec![]], &[gt, gt]), 0.0);
    }

    #[test]
    fn false_positive_ranked_first_halves_precision() {
        let gt = Some(BBox::new(0.0, 0.0, 10.0, 10.0));
        let ap = average_precision(&[vec![det(50.0, 0.9), det(0.0, 0.5)]], &[gt]);
        assert!((ap - 0.5).abs() < 1e-15);
    }

    #[test]
    fn views_without_truth_only_add_false_positives() {
        let gt = Some(BBox::new(0.0, 0.0, 10.0, 10.0));
        let ap = average_precision(&[vec![det(0.0, 0.5)], vec![det(0.0, 0.9)]], &[gt, None]);
        assert!((ap - 0.5).abs() < 1e-15);
    }

    #[test]
    fn duplicate_match_counts_once() {
        let gt = Some(BBox::new(0.0, 0.0, 10.0, 10.0));
        let ap = average_precision(&[vec![det(0.0, 0.9), det(1.0, 0.8)]], &[gt]);
        assert_eq!(ap, 1.0);
    }
}
