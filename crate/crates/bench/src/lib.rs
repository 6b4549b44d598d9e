//! Shared fixtures for the benchmarks.

use balltrack_core::geometry::Point2;
use balltrack_core::patching::{crop_window, FrameDims, DEFAULT_PATCH_SIZE};
use balltrack_core::raster::Image;
use balltrack_core::synth::{self, DiskSample, Sequence, SequenceParams, SwingParams};

/// The default 50-frame swing.
pub fn swing_sequence() -> Sequence {
    synth::generate(&SequenceParams::Swing(SwingParams::default())).expect("default swing is valid")
}

/// A noisy 416×416 patch holding one ball of radius `r` near its center.
pub fn ball_patch(r: f64) -> Image {
    let sample = DiskSample { center: Point2::new(203.5, 211.25), radius: r };
    synth::render_disks(FrameDims::new(DEFAULT_PATCH_SIZE, DEFAULT_PATCH_SIZE), &[sample], 2.0, 1, 0)
}

/// The tracker's first patch of the default swing.
pub fn first_swing_patch(seq: &Sequence) -> Image {
    let center = seq.annotations[0].expect("ball visible in frame 0").center();
    let w = crop_window(center, seq.frames[0].dims(), DEFAULT_PATCH_SIZE).expect("frame larger than patch");
    seq.frames[0].crop(&w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use balltrack_core::detectors::{blob_detect, BlobConfig};

    #[test]
    fn fixtures_contain_a_ball() {
        assert_eq!(blob_detect(&ball_patch(6.0), &BlobConfig::default()).len(), 1);
        let seq = swing_sequence();
        assert_eq!(blob_detect(&first_swing_patch(&seq), &BlobConfig::default()).len(), 1);
    }
}
