//! The online trainee: a grid detector fine-tuned one gradient step at a
//! time, and a template tracker that keeps feeding it boxes between user
//! annotations.

mod ap;
mod bbox;
mod detector;
mod tracker;

pub use ap::{average_precision, MATCH_IOU};
pub use bbox::{iou, BBox};
pub use detector::{
    non_max_suppression, sigmoid, Detection, DetectorConfig, DetectorModel, TrainingTargets, ViewFeatures,
    N_FEATURES, N_OUTPUTS,
};
pub use tracker::{init_tracker, ncc, TrackerConfig, TrackerState};

use crate::scene::{GroundTruth, ViewImage};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraineeError {
    #[error("training round needs a ground-truth box")]
    MissingGroundTruth,
    #[error("box {0:?} is too small to track")]
    DegenerateBox(BBox),
    #[error("AP needs at least one view")]
    NoViews,
    #[error("model grid {model} does not match view features grid {view}")]
    GridMismatch { model: usize, view: usize },
    #[error("invalid trainee config: {0}")]
    Config(String),
    #[error("detector checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraineeState {
    pub detector: DetectorModel,
    pub tracker: Option<TrackerState>,
    pub tracker_config: TrackerConfig,
}

impl TraineeState {
    pub fn new(detector: DetectorConfig, tracker_config: TrackerConfig) -> Result<Self, TraineeError> {
        Ok(Self { detector: DetectorModel::new(detector)?, tracker: None, tracker_config })
    }

    /// Starts tracking at `gt`. On a degenerate box the tracker is cleared and
    /// the error returned.
    pub fn start_tracking(&mut self, view: &ViewImage, gt: &BBox) -> Result<(), TraineeError> {
        match init_tracker(view, gt, &self.tracker_config) {
            Ok(t) => {
                self.tracker = Some(t);
                Ok(())
            }
            Err(e) => {
                self.tracker = None;
                Err(e)
            }
        }
    }

    /// Runs the tracker on `view`. Below the confidence threshold the tracker
    /// is dropped and `None` returned; without a tracker this is a no-op.
    pub fn update_tracker(&mut self, view: &ViewImage) -> Option<BBox> {
        let tracker = self.tracker.as_mut()?;
        let (confidence, bbox) = tracker.search(view);
        if confidence >= tracker.config.confidence_threshold {
            tracker.last_bbox = bbox;
            Some(bbox)
        } else {
            self.tracker = None;
            None
        }
    }

    pub fn tracked_box(&self) -> Option<BBox> {
        self.tracker.as_ref().map(|t| t.last_bbox)
    }
}

/// Value-semantics wrapper around [`TraineeState::update_tracker`].
pub fn update_tracker(state: &TraineeState, view: &ViewImage) -> (TraineeState, Option<BBox>) {
    let mut next = state.clone();
    let b = next.update_tracker(view);
    (next, b)
}

/// AP of `model` over annotated views.
pub fn evaluate_ap(model: &DetectorModel, views: &[(ViewImage, GroundTruth)]) -> Result<f64, TraineeError> {
    if views.is_empty() {
        return Err(TraineeError::NoViews);
    }
    let dets: Vec<Vec<Detection>> = views.iter().map(|(v, _)| model.detect(v)).collect();
    let truths: Vec<Option<BBox>> = views.iter().map(|(_, g)| g.bbox).collect();
    Ok(average_precision(&dets, &truths))
}

/// Same as [`evaluate_ap`] over precomputed cell features.
pub fn evaluate_ap_features(
    model: &DetectorModel,
    views: &[(&ViewFeatures, Option<BBox>)],
) -> Result<f64, TraineeError> {
    if views.is_empty() {
        return Err(TraineeError::NoViews);
    }
    let dets: Vec<Vec<Detection>> = views.iter().map(|(f, _)| model.detect_features(f)).collect();
    let truths: Vec<Option<BBox>> = views.iter().map(|(_, g)| *g).collect();
    Ok(average_precision(&dets, &truths))
}
