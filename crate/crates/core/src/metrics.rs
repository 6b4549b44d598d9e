//! Detection and tracking evaluation: average precision at an IoU threshold,
//! center-location-error precision, IoU success curve with AUC, and frame rate.

use std::time::Duration;

use serde::Serialize;

use crate::error::MetricsError;
use crate::geometry::{cle, iou, BBox, Detection};
use crate::tracker::{TrackRecord, TrackStatus};

/// Number of IoU thresholds in the success curve (0.00, 0.05, …, 1.00).
pub const SUCCESS_SAMPLES: usize = 21;
/// CLE thresholds (px) reported by default.
pub const DEFAULT_CLE_THRESHOLDS: [f64; 3] = [1.0, 2.0, 5.0];
pub const DEFAULT_AP_THRESHOLDS: [f64; 2] = [0.25, 0.5];

/// Predictions and ground truth for one image.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImageDetections {
    pub detections: Vec<Detection>,
    pub truths: Vec<BBox>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionEvalInput {
    pub images: Vec<ImageDetections>,
}

/// Area under the precision envelope over recall (all-point interpolation).
///
/// Detections from all images are ranked by score (stable for ties). Each one
/// claims the unmatched ground truth in its image with the highest IoU, and
/// counts as a true positive if that IoU reaches `iou_thr`.
pub fn average_precision(input: &DetectionEvalInput, iou_thr: f64) -> Result<f64, MetricsError> {
    if !(iou_thr > 0.0 && iou_thr < 1.0) {
        return Err(MetricsError::InvalidThreshold(iou_thr));
    }
    let n_truth: usize = input.images.iter().map(|im| im.truths.len()).sum();
    if n_truth == 0 {
        return Err(MetricsError::NoGroundTruth);
    }

    let mut ranked: Vec<(usize, &Detection)> = input
        .images
        .iter()
        .enumerate()
        .flat_map(|(i, im)| im.detections.iter().map(move |d| (i, d)))
        .collect();
    ranked.sort_by(|a, b| b.1.score.total_cmp(&a.1.score));

    let mut matched: Vec<Vec<bool>> = input.images.iter().map(|im| vec![false; im.truths.len()]).collect();
    let mut tp = 0usize;
    let mut points = Vec::with_capacity(ranked.len());
    for (k, (img, det)) in ranked.iter().enumerate() {
        let best = input.images[*img]
            .truths
            .iter()
            .enumerate()
            .filter(|(g, _)| !matched[*img][*g])
            .map(|(g, t)| (g, iou(&det.bbox, t)))
            .fold(None, |best: Option<(usize, f64)>, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            });
        if let Some((g, v)) = best {
            if v >= iou_thr {
                matched[*img][g] = true;
                tp += 1;
            }
        }
        let recall = tp as f64 / n_truth as f64;
        let precision = tp as f64 / (k + 1) as f64;
        points.push((recall, precision));
    }

    // Make precision monotone from the right, then sum rectangles.
    for i in (0..points.len().saturating_sub(1)).rev() {
        points[i].1 = points[i].1.max(points[i + 1].1);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (r, p) in points {
        ap += (r - prev_recall) * p;
        prev_recall = r;
    }
    Ok(ap)
}

/// A tracker output paired with ground truth. `None` output means the track
/// was lost on that frame and always counts as a failure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePair {
    pub output: Option<BBox>,
    pub truth: BBox,
}

impl FramePair {
    pub fn iou(&self) -> f64 {
        self.output.map_or(0.0, |o| iou(&o, &self.truth))
    }

    pub fn cle(&self) -> f64 {
        self.output.map_or(f64::INFINITY, |o| cle(&o, &self.truth))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackingEvalInput {
    pub pairs: Vec<FramePair>,
}

impl TrackingEvalInput {
    /// Pairs tracker records with per-frame annotations, skipping frames without
    /// ground truth. Lost frames become failures.
    pub fn from_records(records: &[TrackRecord], annotations: &[Option<BBox>]) -> Self {
        let pairs = records
            .iter()
            .filter_map(|r| {
                let truth = annotations.get(r.frame_index).copied().flatten()?;
                let output = (r.status != TrackStatus::Lost).then_some(r.output_bbox);
                Some(FramePair { output, truth })
            })
            .collect();
        Self { pairs }
    }
}

/// Fraction of frames with CLE ≤ threshold, for each threshold.
pub fn precision_curve(
    input: &TrackingEvalInput,
    thresholds: &[f64],
) -> Result<Vec<(f64, f64)>, MetricsError> {
    if input.pairs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let errors: Vec<f64> = input.pairs.iter().map(FramePair::cle).collect();
    let n = errors.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| (t, errors.iter().filter(|&&e| e <= t).count() as f64 / n))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessCurve {
    /// `(θ, fraction of frames with IoU > θ)`.
    pub samples: Vec<(f64, f64)>,
    /// Mean of the samples.
    pub auc: f64,
}

pub fn success_thresholds() -> impl Iterator<Item = f64> {
    (0..SUCCESS_SAMPLES).map(|i| i as f64 / (SUCCESS_SAMPLES - 1) as f64)
}

pub fn success_auc(input: &TrackingEvalInput) -> Result<SuccessCurve, MetricsError> {
    if input.pairs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let ious: Vec<f64> = input.pairs.iter().map(FramePair::iou).collect();
    let n = ious.len() as f64;
    let samples: Vec<(f64, f64)> = success_thresholds()
        .map(|th| (th, ious.iter().filter(|&&v| v > th).count() as f64 / n))
        .collect();
    let auc = samples.iter().map(|s| s.1).sum::<f64>() / SUCCESS_SAMPLES as f64;
    Ok(SuccessCurve { samples, auc })
}

/// Frames per second over a run: frame count over summed per-frame time.
pub fn fps_from_elapsed(elapsed: &[Duration]) -> Result<f64, MetricsError> {
    let total: f64 = elapsed.iter().map(Duration::as_secs_f64).sum();
    if total <= 0.0 {
        return Err(MetricsError::ZeroElapsed);
    }
    Ok(elapsed.len() as f64 / total)
}

pub fn fps_summary(records: &[TrackRecord]) -> Result<f64, MetricsError> {
    let elapsed: Vec<Duration> = records.iter().map(|r| r.elapsed).collect();
    fps_from_elapsed(&elapsed)
}

/// Converts per-frame latency to a frame rate.
pub fn fps_from_latency_ms(ms: f64) -> f64 {
    1000.0 / ms
}

/// Unweighted mean of per-sequence rates.
pub fn average_fps(per_sequence: &[f64]) -> Option<f64> {
    (!per_sequence.is_empty()).then(|| per_sequence.iter().sum::<f64>() / per_sequence.len() as f64)
}

/// Everything reported for one evaluated run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricsReport {
    pub ap_by_threshold: Vec<(f64, f64)>,
    pub precision_at: Vec<(f64, f64)>,
    pub success_curve: Vec<(f64, f64)>,
    pub success_auc: Option<f64>,
    pub mean_fps: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x: f64, y: f64, s: f64) -> BBox {
        BBox { x, y, w: s, h: s }
    }

    fn d(bbox: BBox, score: f64) -> Detection {
        Detection { bbox, score }
    }

    fn single(dets: Vec<Detection>, truths: Vec<BBox>) -> DetectionEvalInput {
        DetectionEvalInput { images: vec![ImageDetections { detections: dets, truths }] }
    }

    #[test]
    fn ap_hand_examples() {
        let gt = b(10.0, 10.0, 10.0);
        let far = b(100.0, 100.0, 10.0);
        assert_eq!(average_precision(&single(vec![d(gt, 0.9)], vec![gt]), 0.5).unwrap(), 1.0);
        assert_eq!(average_precision(&single(vec![d(gt, 0.9)], vec![gt]), 0.99).unwrap(), 1.0);
        assert_eq!(
            average_precision(&single(vec![d(gt, 0.9), d(far, 0.8)], vec![gt]), 0.5).unwrap(),
            1.0
        );
        assert_eq!(
            average_precision(&single(vec![d(far, 0.9), d(gt, 0.8)], vec![gt]), 0.5).unwrap(),
            0.5
        );
    }

    #[test]
    fn ap_errors() {
        assert_eq!(
            average_precision(&single(vec![d(b(0.0, 0.0, 1.0), 0.5)], vec![]), 0.5),
            Err(MetricsError::NoGroundTruth)
        );
        assert!(matches!(
            average_precision(&single(vec![], vec![b(0.0, 0.0, 1.0)]), 0.0),
            Err(MetricsError::InvalidThreshold(_))
        ));
    }

    #[test]
    fn ap_missed_truth_limits_recall() {
        let (g1, g2) = (b(0.0, 0.0, 10.0), b(50.0, 50.0, 10.0));
        let ap = average_precision(&single(vec![d(g1, 0.9)], vec![g1, g2]), 0.5).unwrap();
        assert_eq!(ap, 0.5);
        assert_eq!(average_precision(&single(vec![], vec![g1]), 0.5).unwrap(), 0.0);
    }

    #[test]
    fn ap_threshold_matters() {
        let gt = b(0.0, 0.0, 10.0);
        let shifted = b(4.0, 0.0, 10.0); // IoU = 60/140
        let input = single(vec![d(shifted, 0.9)], vec![gt]);
        assert_eq!(average_precision(&input, 0.25).unwrap(), 1.0);
        assert_eq!(average_precision(&input, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn precision_hand_example() {
        let t = b(0.0, 0.0, 10.0);
        let input = TrackingEvalInput {
            pairs: vec![
                FramePair { output: Some(t), truth: t },
                FramePair { output: Some(b(1.0, 0.0, 10.0)), truth: t },
                FramePair { output: Some(b(3.0, 0.0, 10.0)), truth: t },
            ],
        };
        let p = precision_curve(&input, &[1.0, 2.0, 5.0]).unwrap();
        assert_eq!(p, vec![(1.0, 2.0 / 3.0), (2.0, 2.0 / 3.0), (5.0, 1.0)]);
    }

    #[test]
    fn success_examples() {
        let t = b(0.0, 0.0, 10.0);
        let perfect = TrackingEvalInput { pairs: vec![FramePair { output: Some(t), truth: t }; 4] };
        let s = success_auc(&perfect).unwrap();
        assert_eq!(s.samples.len(), 21);
        assert!(s.samples[..20].iter().all(|p| p.1 == 1.0));
        assert_eq!(s.samples[20], (1.0, 0.0));
        assert!((s.auc - 20.0 / 21.0).abs() < 1e-12);

        let disjoint =
            TrackingEvalInput { pairs: vec![FramePair { output: Some(b(50.0, 50.0, 10.0)), truth: t }] };
        let s = success_auc(&disjoint).unwrap();
        assert_eq!(s.samples[0].1, 0.0);
        assert_eq!(s.auc, 0.0);

        // half-overlap: 10x10 vs 10x5 inside it
        let half = TrackingEvalInput {
            pairs: vec![FramePair { output: Some(BBox { x: 0.0, y: 0.0, w: 10.0, h: 5.0 }), truth: t }],
        };
        let s = success_auc(&half).unwrap();
        assert!(s.samples[..10].iter().all(|p| p.1 == 1.0));
        assert!(s.samples[10..].iter().all(|p| p.1 == 0.0));
        assert!((s.auc - 10.0 / 21.0).abs() < 1e-12);
    }

    #[test]
    fn lost_frames_fail() {
        let t = b(0.0, 0.0, 10.0);
        let input = TrackingEvalInput {
            pairs: vec![FramePair { output: None, truth: t }, FramePair { output: Some(t), truth: t }],
        };
        assert_eq!(precision_curve(&input, &[1000.0]).unwrap()[0].1, 0.5);
        assert_eq!(success_auc(&input).unwrap().samples[0].1, 0.5);
    }

    #[test]
    fn empty_tracking_input() {
        let empty = TrackingEvalInput::default();
        assert_eq!(precision_curve(&empty, &[1.0]), Err(MetricsError::EmptyInput));
        assert_eq!(success_auc(&empty), Err(MetricsError::EmptyInput));
    }

    #[test]
    fn fps_examples() {
        let frames = vec![Duration::from_millis(40); 100];
        assert!((fps_from_elapsed(&frames).unwrap() - 25.0).abs() < 1e-9);
        assert_eq!(average_fps(&[24.0, 26.0]), Some(25.0));
        assert!((fps_from_latency_ms(36.0) - 27.78).abs() < 0.005);
        assert_eq!(fps_from_elapsed(&[Duration::ZERO]), Err(MetricsError::ZeroElapsed));
        assert_eq!(average_fps(&[]), None);
    }
}
