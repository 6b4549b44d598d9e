use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("box coordinates must be finite")]
    NonFinite,
    #[error("box must have positive size, got {w}x{h}")]
    EmptyBox { w: f64, h: f64 },
    #[error("detection score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KalmanError {
    #[error("variance `{name}` must be non-negative and finite, got {value}")]
    InvalidVariance { name: &'static str, value: f64 },
    #[error("measurement variance must be positive, got {0}")]
    NonPositiveMeasurementVariance(f64),
    #[error("innovation covariance is singular (det = {det:e}); check R and P")]
    SingularInnovation { det: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatchError {
    #[error(
        "frame {width}x{height} is smaller than the {size}x{size} window; pad the frame or use a smaller patch size"
    )]
    FrameTooSmall { width: u32, height: u32, size: u32 },
    #[error("patch size must be positive")]
    ZeroSize,
    #[error("ball box {0:?} is not fully inside the frame")]
    BallOutsideFrame(crate::geometry::BBox),
}

/// Failures of the external detector transport. The tracker treats every one
/// of these as a missed detection for the frame.
#[derive(Debug, Error)]
pub enum DetectError {
    #[error("failed to start detector worker: {0}")]
    Spawn(#[source] std::io::Error),
    #[error("i/o error talking to detector worker: {0}")]
    Io(#[from] std::io::Error),
    #[error("detector worker exited or closed its output")]
    Crashed,
    #[error("detector worker did not answer within {0:?}")]
    Timeout(Duration),
    #[error("malformed message from detector worker: {0}")]
    Malformed(String),
    #[error("response id {got} does not match request id {expected}")]
    IdMismatch { expected: u64, got: u64 },
    #[error("detector worker reported an error: {0}")]
    Worker(String),
    #[error("handshake failed: {0}")]
    Handshake(String),
    #[error("failed to encode patch: {0}")]
    Encode(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackerError {
    #[error(transparent)]
    Patch(#[from] PatchError),
    #[error(transparent)]
    Kalman(#[from] KalmanError),
    #[error("initial center {0:?} is outside the frame")]
    InitOutsideFrame(crate::geometry::Point2),
    #[error("sequence has no frames")]
    EmptySequence,
    #[error("frame {index}: {message}")]
    Frame { index: usize, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no ground truth boxes; average precision is undefined")]
    NoGroundTruth,
    #[error("no paired frames to evaluate")]
    EmptyInput,
    #[error("total elapsed time is zero; fps is undefined")]
    ZeroElapsed,
    #[error("IoU threshold {0} must lie in (0, 1)")]
    InvalidThreshold(f64),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}
