//! Small-object tracking by detection.
//!
//! A constant-velocity Kalman filter predicts where the ball will be, a fixed
//! size window is cropped around that prediction, a pluggable detector looks
//! for the ball inside the window, and the chosen detection corrects the
//! filter. Around that loop sit a synthetic sequence generator, the shifted
//! crop augmentation used to build detector training sets, and the usual
//! detection and tracking metrics.

pub mod dataset;
pub mod detectors;
pub mod error;
pub mod geometry;
pub mod kalman;
pub mod metrics;
pub mod patching;
pub mod raster;
pub mod synth;
pub mod tracker;

pub use detectors::{BlobConfig, BlobDetector, DetectContext, Detector, ExternClient, OracleDetector, OracleNoise};
pub use error::{DatasetError, DetectError, GeometryError, KalmanError, MetricsError, PatchError, TrackerError};
pub use geometry::{cle, iou, BBox, Detection, Point2};
pub use kalman::{KalmanParams, KalmanState, Measurement};
pub use patching::{CropWindow, FrameDims};
pub use raster::Image;
pub use synth::Sequence;
pub use tracker::{SelectPolicy, TrackRecord, TrackStatus, Tracker, TrackerConfig};
