//! Single-object tracking-by-detection loop.
//!
//! Each frame: predict with the Kalman time update, crop a window around the
//! predicted center, run the detector on the patch, pick one detection, and
//! correct the filter with its center. Frames without a usable detection coast
//! on the prediction; after more than `max_coast` consecutive misses the track
//! is declared lost.

use std::borrow::Borrow;
use std::fmt::Display;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::detectors::{DetectContext, Detector};
use crate::error::TrackerError;
use crate::geometry::{BBox, Detection, Point2};
use crate::kalman::{measurement_update, time_update, KalmanParams, KalmanState, Measurement};
use crate::patching::{crop_window, to_frame, CropWindow, DEFAULT_PATCH_SIZE};
use crate::raster::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectPolicy {
    HighestScore,
    NearestToPrediction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TrackStatus {
    Tracked,
    Coasting,
    Lost,
}

impl TrackStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrackStatus::Tracked => "TRACKED",
            TrackStatus::Coasting => "COASTING",
            TrackStatus::Lost => "LOST",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub patch_size: u32,
    pub kalman: KalmanParams,
    /// Consecutive missed frames tolerated before the track is lost.
    pub max_coast: u32,
    pub select_policy: SelectPolicy,
    pub min_score: f64,
    /// Output box size used until the first detection arrives.
    pub default_box_size: f64,
    /// Stop `run` at the first lost frame instead of emitting lost rows to the end.
    pub stop_on_lost: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            patch_size: DEFAULT_PATCH_SIZE,
            kalman: KalmanParams::default(),
            max_coast: 5,
            select_policy: SelectPolicy::NearestToPrediction,
            min_score: 0.25,
            default_box_size: 16.0,
            stop_on_lost: false,
        }
    }
}

/// What the tracker produced for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackRecord {
    pub frame_index: usize,
    pub output_bbox: BBox,
    /// Center the crop window was built around (the a priori estimate, or the
    /// initial center on the first frame).
    pub predicted: Point2,
    pub state: KalmanState,
    pub status: TrackStatus,
    /// Detection fed to the filter, in frame coordinates.
    pub detection_used: Option<Detection>,
    pub window: CropWindow,
    pub elapsed: Duration,
}

impl TrackRecord {
    pub fn elapsed_ms(&self) -> f64 {
        self.elapsed.as_secs_f64() * 1e3
    }
}

fn select(
    dets: &[Detection],
    window: &CropWindow,
    anchor: Point2,
    config: &TrackerConfig,
) -> Option<Detection> {
    let candidates = dets.iter().filter(|d| d.score >= config.min_score).map(|d| to_frame(d, window));
    match config.select_policy {
        // detectors return descending scores; the first survivor wins ties
        SelectPolicy::HighestScore => candidates.fold(None, |best: Option<Detection>, d| match best {
            Some(b) if b.score >= d.score => Some(b),
            _ => Some(d),
        }),
        SelectPolicy::NearestToPrediction => candidates.fold(None, |best: Option<Detection>, d| match best {
            Some(b) if b.bbox.center().distance(&anchor) <= d.bbox.center().distance(&anchor) => Some(b),
            _ => Some(d),
        }),
    }
}

fn detect_in(
    frame: &Image,
    frame_index: usize,
    center: Point2,
    detector: &mut dyn Detector,
    config: &TrackerConfig,
) -> Result<(CropWindow, Option<Detection>), TrackerError> {
    let window = crop_window(center, frame.dims(), config.patch_size)?;
    let patch = frame.crop(&window);
    let ctx = DetectContext { frame_index, window };
    let dets = match detector.detect(&patch, &ctx) {
        Ok(d) => d,
        Err(e) => {
            log::warn!("frame {frame_index}: detector `{}` failed: {e}", detector.name());
            Vec::new()
        }
    };
    Ok((window, select(&dets, &window, center, config)))
}

/// Per-sequence tracker state. One instance per sequence.
#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    state: KalmanState,
    frame_index: usize,
    coast: u32,
    status: TrackStatus,
    box_size: (f64, f64),
}

impl Tracker {
    /// Starts a track on the first frame with a window centered at `init_center`.
    pub fn init(
        first_frame: &Image,
        init_center: Point2,
        detector: &mut dyn Detector,
        config: TrackerConfig,
    ) -> Result<(Self, TrackRecord), TrackerError> {
        let started = Instant::now();
        if !init_center.is_finite() || !first_frame.dims().contains_point(&init_center) {
            return Err(TrackerError::InitOutsideFrame(init_center));
        }
        let (window, chosen) = detect_in(first_frame, 0, init_center, detector, &config)?;
        let (center, status, box_size) = match &chosen {
            Some(d) => (d.bbox.center(), TrackStatus::Tracked, (d.bbox.w, d.bbox.h)),
            None => (init_center, TrackStatus::Coasting, (config.default_box_size, config.default_box_size)),
        };
        let state = KalmanState::at_rest(center);
        let output_bbox = match &chosen {
            Some(d) => d.bbox,
            None => BBox::from_center(center, box_size.0, box_size.1),
        };
        let tracker = Self { config, state, frame_index: 0, coast: 0, status, box_size };
        let record = TrackRecord {
            frame_index: 0,
            output_bbox,
            predicted: init_center,
            state,
            status,
            detection_used: chosen,
            window,
            elapsed: started.elapsed(),
        };
        Ok((tracker, record))
    }

    pub fn status(&self) -> TrackStatus {
        self.status
    }

    pub fn state(&self) -> &KalmanState {
        &self.state
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Processes the next frame. Once lost, the filter keeps predicting but the
    /// detector is no longer consulted.
    pub fn step(&mut self, frame: &Image, detector: &mut dyn Detector) -> Result<TrackRecord, TrackerError> {
        let started = Instant::now();
        self.frame_index += 1;
        let prior = time_update(&self.state, &self.config.kalman);
        let predicted = prior.position();

        let (window, chosen) = if self.status == TrackStatus::Lost {
            (crop_window(predicted, frame.dims(), self.config.patch_size)?, None)
        } else {
            detect_in(frame, self.frame_index, predicted, detector, &self.config)?
        };

        let output_bbox = match &chosen {
            Some(d) => {
                self.state = measurement_update(&prior, &Measurement::from(d.bbox.center()), &self.config.kalman)?;
                self.coast = 0;
                self.status = TrackStatus::Tracked;
                self.box_size = (d.bbox.w, d.bbox.h);
                d.bbox
            }
            None => {
                self.state = prior;
                if self.status != TrackStatus::Lost {
                    self.coast += 1;
                    self.status =
                        if self.coast > self.config.max_coast { TrackStatus::Lost } else { TrackStatus::Coasting };
                }
                BBox::from_center(predicted, self.box_size.0, self.box_size.1)
            }
        };

        Ok(TrackRecord {
            frame_index: self.frame_index,
            output_bbox,
            predicted,
            state: self.state,
            status: self.status,
            detection_used: chosen,
            window,
            elapsed: started.elapsed(),
        })
    }
}

/// Tracks through a stream of frames, initializing on the first one.
///
/// Frame loading errors abort the run and name the failing frame.
pub fn run_frames<I, F, E>(
    frames: I,
    detector: &mut dyn Detector,
    config: &TrackerConfig,
    init: Point2,
) -> Result<Vec<TrackRecord>, TrackerError>
where
    I: IntoIterator<Item = Result<F, E>>,
    F: Borrow<Image>,
    E: Display,
{
    let frame_err = |index: usize, e: E| TrackerError::Frame { index, message: e.to_string() };
    let mut iter = frames.into_iter();
    let first = match iter.next() {
        None => return Err(TrackerError::EmptySequence),
        Some(f) => f.map_err(|e| frame_err(0, e))?,
    };
    let (mut tracker, rec) = Tracker::init(first.borrow(), init, detector, config.clone())?;
    let mut records = vec![rec];
    for (i, frame) in iter.enumerate() {
        if config.stop_on_lost && tracker.status() == TrackStatus::Lost {
            break;
        }
        let frame = frame.map_err(|e| frame_err(i + 1, e))?;
        records.push(tracker.step(frame.borrow(), detector)?);
    }
    Ok(records)
}

/// Tracks through an in-memory sequence.
pub fn run(
    sequence: &crate::synth::Sequence,
    detector: &mut dyn Detector,
    config: &TrackerConfig,
    init: Point2,
) -> Result<Vec<TrackRecord>, TrackerError> {
    run_frames(
        sequence.frames.iter().map(Ok::<_, std::convert::Infallible>),
        detector,
        config,
        init,
    )
}
