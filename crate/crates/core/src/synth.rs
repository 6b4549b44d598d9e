//! Synthetic golf-ball sequences with exact ground truth.
//!
//! Motion is modeled directly in the image plane: a swing is a ballistic arc
//! whose apparent radius decays geometrically as the ball recedes, a putt is a
//! straight roll decelerating under constant friction. Frames are 8-bit gray:
//! a mid-gray background with optional Gaussian noise and an anti-aliased
//! white disk, optionally smeared along the last inter-frame displacement.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{BBox, Point2};
use crate::patching::FrameDims;
use crate::raster::Image;

pub const BACKGROUND_LEVEL: u8 = 96;
pub const BALL_LEVEL: u8 = 230;
pub const MIN_RADIUS: f64 = 1.5;
/// Sub-pixel samples per axis for disk coverage.
const SUPERSAMPLE: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwingParams {
    pub start: Point2,
    /// Launch speed in the image plane, px/frame.
    pub v0: f64,
    /// Launch angle above horizontal, degrees.
    pub angle: f64,
    /// Downward acceleration, px/frame².
    pub gravity: f64,
    /// Per-frame multiplier on the apparent radius.
    pub depth_rate: f64,
    pub r0: f64,
    pub frames: usize,
    pub frame_dims: FrameDims,
    pub noise_sigma: f64,
    pub blur_samples: usize,
    pub seed: u64,
}

impl Default for SwingParams {
    fn default() -> Self {
        Self {
            start: Point2::new(200.0, 600.0),
            v0: 20.0,
            angle: 45.0,
            gravity: 0.3,
            depth_rate: (4.0f64 / 15.0).powf(1.0 / 49.0),
            r0: 15.0,
            frames: 50,
            frame_dims: FrameDims::new(1280, 720),
            noise_sigma: 0.0,
            blur_samples: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PuttParams {
    pub start: Point2,
    pub v0: f64,
    /// Direction of travel, degrees counter-clockwise from +x (image up is positive).
    pub heading: f64,
    /// Deceleration, px/frame².
    pub friction: f64,
    pub r: f64,
    pub frames: usize,
    pub frame_dims: FrameDims,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for PuttParams {
    fn default() -> Self {
        Self {
            start: Point2::new(200.0, 500.0),
            v0: 6.0,
            heading: 10.0,
            friction: 0.1,
            r: 8.0,
            frames: 80,
            frame_dims: FrameDims::new(1280, 720),
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SequenceParams {
    Swing(SwingParams),
    Putt(PuttParams),
}

/// Frames with per-frame ground truth (`None` once the ball is out of view).
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub frames: Vec<Image>,
    pub annotations: Vec<Option<BBox>>,
    /// Informational only.
    pub fps_nominal: f64,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

impl SwingParams {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), String> {
        if !(self.r0 >= 2.0) {
            return Err(format!("r0 must be at least 2 px, got {}", self.r0));
        }
        if self.frames < 2 {
            return Err(format!("need at least 2 frames, got {}", self.frames));
        }
        if !(self.gravity >= 0.0) {
            return Err(format!("gravity must be non-negative, got {}", self.gravity));
        }
        if !(self.depth_rate > 0.0 && self.depth_rate <= 1.0) {
            return Err(format!("depth_rate must lie in (0, 1], got {}", self.depth_rate));
        }
        if !(self.noise_sigma >= 0.0) || self.blur_samples == 0 {
            return Err("noise_sigma must be >= 0 and blur_samples >= 1".into());
        }
        if !self.start.is_finite() || !self.v0.is_finite() || !self.angle.is_finite() {
            return Err("start, v0 and angle must be finite".into());
        }
        Ok(())
    }

    /// Ball center at (possibly fractional) time `t`, image coordinates.
    pub fn center_at(&self, t: f64) -> Point2 {
        let th = self.angle.to_radians();
        Point2::new(
            self.start.x + self.v0 * th.cos() * t,
            self.start.y - self.v0 * th.sin() * t + 0.5 * self.gravity * t * t,
        )
    }

    pub fn radius_at(&self, t: f64) -> f64 {
        (self.r0 * self.depth_rate.powf(t)).max(MIN_RADIUS)
    }
}

impl PuttParams {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), String> {
        if !(self.friction >= 0.0) {
            return Err(format!("friction must be non-negative, got {}", self.friction));
        }
        if !(self.r > 0.0) {
            return Err(format!("radius must be positive, got {}", self.r));
        }
        if self.frames < 1 {
            return Err("need at least 1 frame".into());
        }
        if !(self.noise_sigma >= 0.0) {
            return Err("noise_sigma must be >= 0".into());
        }
        if !self.start.is_finite() || !(self.v0 >= 0.0) || !self.heading.is_finite() {
            return Err("start and heading must be finite and v0 non-negative".into());
        }
        Ok(())
    }

    /// Time at which the ball stops, or infinity without friction.
    pub fn stop_time(&self) -> f64 {
        if self.friction > 0.0 {
            self.v0 / self.friction
        } else {
            f64::INFINITY
        }
    }

    pub fn speed_at(&self, t: f64) -> f64 {
        (self.v0 - self.friction * t).max(0.0)
    }

    /// Distance rolled by time `t`: the integral of the speed.
    pub fn distance_at(&self, t: f64) -> f64 {
        let t = t.min(self.stop_time());
        self.v0 * t - 0.5 * self.friction * t * t
    }

    pub fn center_at(&self, t: f64) -> Point2 {
        let h = self.heading.to_radians();
        let s = self.distance_at(t);
        Point2::new(self.start.x + s * h.cos(), self.start.y - s * h.sin())
    }
}

/// Whether a disk of radius `r` at `c` overlaps the frame rectangle at all.
fn disk_visible(c: Point2, r: f64, frame: FrameDims) -> bool {
    let dx = c.x - c.x.clamp(0.0, frame.width as f64);
    let dy = c.y - c.y.clamp(0.0, frame.height as f64);
    dx * dx + dy * dy < r * r
}

fn truth_box(c: Point2, r: f64, frame: FrameDims) -> Option<BBox> {
    disk_visible(c, r, frame).then(|| BBox::from_center(c, 2.0 * r, 2.0 * r))
}

pub fn swing_truth(p: &SwingParams, t: usize) -> Option<BBox> {
    truth_box(p.center_at(t as f64), p.radius_at(t as f64), p.frame_dims)
}

pub fn putt_truth(p: &PuttParams, t: usize) -> Option<BBox> {
    truth_box(p.center_at(t as f64), p.r, p.frame_dims)
}

/// One disk exposure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskSample {
    pub center: Point2,
    pub radius: f64,
}

/// Renders the average of the given disk exposures over the background, then
/// adds noise from a generator seeded with `(seed, stream)`.
pub fn render_disks(
    dims: FrameDims,
    samples: &[DiskSample],
    noise_sigma: f64,
    seed: u64,
    stream: u64,
) -> Image {
    let (w, h) = (dims.width as usize, dims.height as usize);
    let mut coverage = vec![0.0f32; w * h];
    let weight = if samples.is_empty() { 0.0 } else { 1.0 / samples.len() as f32 };
    let step = 1.0 / SUPERSAMPLE as f64;
    for s in samples {
        let r2 = s.radius * s.radius;
        let x0 = (s.center.x - s.radius).floor().max(0.0) as usize;
        let y0 = (s.center.y - s.radius).floor().max(0.0) as usize;
        let x1 = ((s.center.x + s.radius).ceil().max(0.0) as usize).min(w);
        let y1 = ((s.center.y + s.radius).ceil().max(0.0) as usize).min(h);
        for py in y0..y1 {
            for px in x0..x1 {
                let mut hits = 0u32;
                for sy in 0..SUPERSAMPLE {
                    let yy = py as f64 + (sy as f64 + 0.5) * step - s.center.y;
                    for sx in 0..SUPERSAMPLE {
                        let xx = px as f64 + (sx as f64 + 0.5) * step - s.center.x;
                        if xx * xx + yy * yy <= r2 {
                            hits += 1;
                        }
                    }
                }
                if hits > 0 {
                    coverage[py * w + px] += weight * hits as f32 / (SUPERSAMPLE * SUPERSAMPLE) as f32;
                }
            }
        }
    }

    let span = (BALL_LEVEL - BACKGROUND_LEVEL) as f64;
    let mut img = Image::filled(dims.width, dims.height, 1, BACKGROUND_LEVEL);
    let noise = (noise_sigma > 0.0).then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        (rng, Normal::new(0.0, noise_sigma).expect("finite sigma"))
    });
    match noise {
        None => {
            for (px, &c) in img.data_mut().iter_mut().zip(&coverage) {
                if c > 0.0 {
                    *px = (BACKGROUND_LEVEL as f64 + c.min(1.0) as f64 * span).round() as u8;
                }
            }
        }
        Some((mut rng, normal)) => {
            for (px, &c) in img.data_mut().iter_mut().zip(&coverage) {
                let v = BACKGROUND_LEVEL as f64 + c.min(1.0) as f64 * span + normal.sample(&mut rng);
                *px = v.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    img
}

/// Exposure times for frame `t`: `blur_samples` instants spread back over the
/// preceding inter-frame interval, newest first.
fn exposure_times(t: usize, blur_samples: usize) -> impl Iterator<Item = f64> {
    let n = blur_samples.max(1);
    (0..n).map(move |i| (t as f64 - i as f64 / n as f64).max(0.0))
}

pub fn render_swing_frame(p: &SwingParams, t: usize) -> Image {
    let samples: Vec<DiskSample> = exposure_times(t, p.blur_samples)
        .map(|tau| DiskSample { center: p.center_at(tau), radius: p.radius_at(tau) })
        .collect();
    render_disks(p.frame_dims, &samples, p.noise_sigma, p.seed, t as u64)
}

pub fn render_putt_frame(p: &PuttParams, t: usize) -> Image {
    let sample = DiskSample { center: p.center_at(t as f64), radius: p.r };
    render_disks(p.frame_dims, &[sample], p.noise_sigma, p.seed, t as u64)
}

/// Renders ground truth alone: background plus an unblurred disk inscribed in
/// `truth`, or plain background when absent.
pub fn render(truth: Option<&BBox>, dims: FrameDims, noise_sigma: f64, seed: u64, t: u64) -> Image {
    let samples: Vec<DiskSample> = truth
        .map(|b| DiskSample { center: b.center(), radius: b.w.min(b.h) / 2.0 })
        .into_iter()
        .collect();
    render_disks(dims, &samples, noise_sigma, seed, t)
}

pub fn generate(params: &SequenceParams) -> Result<Sequence, String> {
    let (frames, annotations) = match params {
        SequenceParams::Swing(p) => {
            p.validate()?;
            (0..p.frames).map(|t| (render_swing_frame(p, t), swing_truth(p, t))).unzip()
        }
        SequenceParams::Putt(p) => {
            p.validate()?;
            (0..p.frames).map(|t| (render_putt_frame(p, t), putt_truth(p, t))).unzip()
        }
    };
    Ok(Sequence { frames, annotations, fps_nominal: 30.0 })
}
