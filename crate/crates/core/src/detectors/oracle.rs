//! Ground-truth driven detector with configurable noise, standing in for a
//! trained network in tests and synthetic experiments.
//!
//! Randomness comes from ChaCha8 seeded with `seed` and switched to stream
//! `frame_index`, so each frame's output depends only on `(seed, frame)` and is
//! identical on every platform.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::{sort_by_score, DetectContext, Detector};
use crate::error::DetectError;
use crate::geometry::{BBox, Detection};
use crate::patching::FrameDims;
use crate::raster::Image;

const FP_MIN_SIDE: f64 = 4.0;
const FP_MAX_SIDE: f64 = 32.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleNoise {
    /// Probability that the true object is reported.
    pub p_detect: f64,
    /// Per-axis Gaussian center noise, px.
    pub sigma_center: f64,
    /// Std-dev of the log size factor.
    pub sigma_size: f64,
    /// Expected false positives per patch.
    pub fp_rate: f64,
    pub seed: u64,
}

impl Default for OracleNoise {
    fn default() -> Self {
        Self { p_detect: 1.0, sigma_center: 0.0, sigma_size: 0.0, fp_rate: 0.0, seed: 0 }
    }
}

impl OracleNoise {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.p_detect) {
            return Err(format!("p_detect {} outside [0, 1]", self.p_detect));
        }
        for (name, v) in
            [("sigma_center", self.sigma_center), ("sigma_size", self.sigma_size), ("fp_rate", self.fp_rate)]
        {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be a finite non-negative number, got {v}"));
            }
        }
        Ok(())
    }
}

/// Emits a noisy copy of `truth` (patch-local) and Poisson-distributed false
/// positives, clipped to the patch.
pub fn oracle_detect(
    patch: FrameDims,
    truth: Option<&BBox>,
    noise: &OracleNoise,
    frame_index: u64,
) -> Vec<Detection> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    rng.set_stream(frame_index);
    let bounds = patch.bounds();
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = Vec::new();

    // Draws happen unconditionally so the stream layout does not depend on the truth.
    let hit = rng.gen::<f64>() < noise.p_detect;
    let (nx, ny, ns): (f64, f64, f64) =
        (std_normal.sample(&mut rng), std_normal.sample(&mut rng), std_normal.sample(&mut rng));
    let score = rng.gen_range(0.7..=1.0);
    if let (true, Some(t)) = (hit, truth) {
        let factor = (noise.sigma_size * ns).exp();
        let (w, h) = (t.w * factor, t.h * factor);
        let moved = BBox {
            x: t.x - (w - t.w) / 2.0 + noise.sigma_center * nx,
            y: t.y - (h - t.h) / 2.0 + noise.sigma_center * ny,
            w,
            h,
        };
        if let Some(b) = moved.clip(&bounds) {
            out.push(Detection { bbox: b, score });
        }
    }

    let n_fp = if noise.fp_rate > 0.0 {
        Poisson::new(noise.fp_rate).expect("positive rate").sample(&mut rng) as usize
    } else {
        0
    };
    for _ in 0..n_fp {
        let side = rng.gen_range(FP_MIN_SIDE..=FP_MAX_SIDE).min(bounds.w).min(bounds.h);
        let x = rng.gen_range(0.0..=(bounds.w - side));
        let y = rng.gen_range(0.0..=(bounds.h - side));
        let score = rng.gen_range(0.1..0.7);
        out.push(Detection { bbox: BBox { x, y, w: side, h: side }, score });
    }
    sort_by_score(&mut out);
    out
}

/// Oracle detector holding frame-coordinate ground truth for a whole sequence.
#[derive(Debug, Clone)]
pub struct OracleDetector {
    pub noise: OracleNoise,
    truths: Vec<Option<BBox>>,
}

impl OracleDetector {
    pub fn new(noise: OracleNoise, truths: Vec<Option<BBox>>) -> Self {
        Self { noise, truths }
    }
}

impl Detector for OracleDetector {
    fn detect(&mut self, patch: &Image, ctx: &DetectContext) -> Result<Vec<Detection>, DetectError> {
        let truth = self
            .truths
            .get(ctx.frame_index)
            .copied()
            .flatten()
            .and_then(|b| ctx.window.box_to_patch(&b).clip(&patch.dims().bounds()));
        Ok(oracle_detect(patch.dims(), truth.as_ref(), &self.noise, ctx.frame_index as u64))
    }

    fn name(&self) -> &str {
        "oracle"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::check_contract;

    const PATCH: FrameDims = FrameDims::new(416, 416);

    fn truth() -> BBox {
        BBox { x: 100.0, y: 120.0, w: 12.0, h: 12.0 }
    }

    #[test]
    fn noise_free_returns_truth() {
        let out = oracle_detect(PATCH, Some(&truth()), &OracleNoise::default(), 3);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].bbox, truth());
        assert!((0.7..=1.0).contains(&out[0].score));
    }

    #[test]
    fn never_detects_with_zero_probability() {
        let noise = OracleNoise { p_detect: 0.0, ..Default::default() };
        for f in 0..50 {
            assert!(oracle_detect(PATCH, Some(&truth()), &noise, f).is_empty());
        }
    }

    #[test]
    fn absent_truth_gives_only_false_positives() {
        let noise = OracleNoise { fp_rate: 3.0, seed: 9, ..Default::default() };
        let mut total = 0;
        for f in 0..200 {
            let out = oracle_detect(PATCH, None, &noise, f);
            assert!(out.iter().all(|d| d.score < 0.7 && d.score >= 0.1));
            check_contract(&out, 416, 416).unwrap();
            total += out.len();
        }
        let mean = total as f64 / 200.0;
        assert!((mean - 3.0).abs() < 0.4, "mean fp count {mean}");
    }

    #[test]
    fn center_noise_has_requested_spread() {
        let noise = OracleNoise { sigma_center: 2.0, seed: 42, ..Default::default() };
        let t = BBox { x: 200.0, y: 200.0, w: 10.0, h: 10.0 };
        let n = 10_000;
        let (mut dx, mut dy) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for f in 0..n as u64 {
            let d = oracle_detect(PATCH, Some(&t), &noise, f)[0];
            dx.push(d.bbox.x - t.x);
            dy.push(d.bbox.y - t.y);
        }
        for s in [dx, dy] {
            let mean = s.iter().sum::<f64>() / n as f64;
            let var = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let sd = var.sqrt();
            assert!((1.9..=2.1).contains(&sd), "sample sd {sd}");
        }
    }

    #[test]
    fn same_seed_same_output() {
        let noise =
            OracleNoise { sigma_center: 1.5, sigma_size: 0.1, fp_rate: 1.0, seed: 5, p_detect: 0.8 };
        for f in 0..20 {
            let a = oracle_detect(PATCH, Some(&truth()), &noise, f);
            let b = oracle_detect(PATCH, Some(&truth()), &noise, f);
            let bits = |v: &[Detection]| -> Vec<u64> {
                v.iter()
                    .flat_map(|d| [d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h, d.score])
                    .map(f64::to_bits)
                    .collect()
            };
            assert_eq!(bits(&a), bits(&b));
        }
    }

    #[test]
    fn clips_to_patch() {
        let edge = BBox { x: 410.0, y: 0.0, w: 6.0, h: 6.0 };
        let noise = OracleNoise { sigma_center: 5.0, sigma_size: 0.3, fp_rate: 2.0, seed: 1, ..Default::default() };
        for f in 0..200 {
            check_contract(&oracle_detect(PATCH, Some(&edge), &noise, f), 416, 416).unwrap();
        }
    }
}
