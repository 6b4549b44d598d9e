//! Detector adapters used by the `track` command.

use std::cell::RefCell;
use std::rc::Rc;

use balltrack_core::dataset::DetectionRow;
use balltrack_core::detectors::{DetectContext, Detector};
use balltrack_core::error::DetectError;
use balltrack_core::geometry::Detection;
use balltrack_core::patching::to_frame;
use balltrack_core::raster::Image;

/// Stands in for a worker that could not be started, so the run still
/// produces one (warning) row per frame.
#[derive(Debug)]
pub struct FailingDetector {
    pub reason: String,
}

impl Detector for FailingDetector {
    fn detect(&mut self, _: &Image, _: &DetectContext) -> Result<Vec<Detection>, DetectError> {
        Err(DetectError::Io(std::io::Error::other(self.reason.clone())))
    }

    fn name(&self) -> &str {
        "unavailable"
    }
}

/// Passes detections through and keeps a frame-coordinate copy.
pub struct Recording<D> {
    pub inner: D,
    pub rows: Rc<RefCell<Vec<DetectionRow>>>,
}

impl<D: Detector> Detector for Recording<D> {
    fn detect(&mut self, patch: &Image, ctx: &DetectContext) -> Result<Vec<Detection>, DetectError> {
        let dets = self.inner.detect(patch, ctx)?;
        self.rows
            .borrow_mut()
            .extend(dets.iter().map(|d| DetectionRow::new(ctx.frame_index, &to_frame(d, &ctx.window))));
        Ok(dets)
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}
