//! The detector boundary of the tracking loop and its implementations.
//!
//! Every detector sees one square patch and returns detections in
//! patch-local coordinates, sorted by descending score. Choosing among
//! several detections is the tracker's job.

mod blob;
mod external;
mod oracle;
pub mod protocol;

pub use blob::{blob_detect, otsu_threshold, BlobConfig, BlobDetector};
pub use external::{ExternClient, DEFAULT_EXTERN_TIMEOUT};
pub use oracle::{oracle_detect, OracleDetector, OracleNoise};

use crate::error::DetectError;
use crate::geometry::{BBox, Detection};
use crate::patching::CropWindow;
use crate::raster::Image;

/// Where the patch came from. Detectors that only look at pixels ignore it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectContext {
    pub frame_index: usize,
    pub window: CropWindow,
}

pub trait Detector {
    fn detect(&mut self, patch: &Image, ctx: &DetectContext) -> Result<Vec<Detection>, DetectError>;

    fn name(&self) -> &str;
}

impl<D: Detector + ?Sized> Detector for Box<D> {
    fn detect(&mut self, patch: &Image, ctx: &DetectContext) -> Result<Vec<Detection>, DetectError> {
        (**self).detect(patch, ctx)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

/// Always returns nothing.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullDetector;

impl Detector for NullDetector {
    fn detect(&mut self, _: &Image, _: &DetectContext) -> Result<Vec<Detection>, DetectError> {
        Ok(Vec::new())
    }

    fn name(&self) -> &str {
        "null"
    }
}

/// Stable descending sort by score.
pub fn sort_by_score(dets: &mut [Detection]) {
    dets.sort_by(|a, b| b.score.total_cmp(&a.score));
}

/// Why a detector output breaks the boundary contract.
#[derive(Debug, Clone, PartialEq)]
pub enum ContractViolation {
    OutOfBounds(usize),
    BadScore(usize),
    BadBox(usize),
    Unsorted(usize),
}

/// Checks the detector contract: finite positive boxes inside the patch,
/// scores in `[0, 1]`, descending score order.
pub fn check_contract(dets: &[Detection], patch_w: u32, patch_h: u32) -> Result<(), ContractViolation> {
    let bounds = BBox { x: 0.0, y: 0.0, w: patch_w as f64, h: patch_h as f64 };
    for (i, d) in dets.iter().enumerate() {
        if d.bbox.validate().is_err() {
            return Err(ContractViolation::BadBox(i));
        }
        if !(0.0..=1.0).contains(&d.score) {
            return Err(ContractViolation::BadScore(i));
        }
        if !bounds.contains(&d.bbox) {
            return Err(ContractViolation::OutOfBounds(i));
        }
        if i > 0 && dets[i - 1].score < d.score {
            return Err(ContractViolation::Unsorted(i));
        }
    }
    Ok(())
}
