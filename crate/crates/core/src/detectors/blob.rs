//! Classical bright-blob detector: global Otsu threshold, 8-connected
//! components, area and circularity filters.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{sort_by_score, DetectContext, Detector};
use crate::error::DetectError;
use crate::geometry::{BBox, Detection};
use crate::raster::Image;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobConfig {
    /// Minimum component area, px².
    pub min_area: usize,
    /// Maximum component area, px².
    pub max_area: usize,
    /// Minimum `4πA/P²`.
    pub min_circularity: f64,
    /// Minimum gap between foreground and background mean luminance. A patch
    /// of pure noise still gets an Otsu split, but with a small gap.
    pub min_contrast: f64,
}

impl Default for BlobConfig {
    fn default() -> Self {
        Self { min_area: 9, max_area: 2000, min_circularity: 0.6, min_contrast: 20.0 }
    }
}

/// Otsu's threshold over an 8-bit histogram. Foreground is `value > t`.
///
/// Returns `None` when the image holds a single gray level. Between-class
/// variances are compared exactly in integer arithmetic; when several
/// thresholds tie, the middle of the tied run is returned.
pub fn otsu_threshold(values: &[u8]) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &v in values {
        hist[v as usize] += 1;
    }
    let n: u64 = values.len() as u64;
    let total: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();

    // sigma_b^2 * n^2 = (n*sum0 - n0*total)^2 / (n0*n1); compare as fractions.
    let mut best: Option<(u128, u128)> = None;
    let (mut first, mut last) = (0usize, 0usize);
    let (mut n0, mut sum0) = (0u64, 0u64);
    for (t, &count) in hist.iter().enumerate().take(255) {
        n0 += count;
        sum0 += t as u64 * count;
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let diff = (n as i128 * sum0 as i128 - n0 as i128 * total as i128).unsigned_abs();
        let num = diff * diff;
        let den = n0 as u128 * n1 as u128;
        match best {
            None => {
                best = Some((num, den));
                first = t;
                last = t;
            }
            Some((bn, bd)) => {
                let ord = match (num.checked_mul(bd), bn.checked_mul(den)) {
                    (Some(lhs), Some(rhs)) => lhs.cmp(&rhs),
                    // very large images: fall back to floating point
                    _ => (num as f64 / den as f64).total_cmp(&(bn as f64 / bd as f64)),
                };
                if ord.is_gt() {
                    best = Some((num, den));
                    first = t;
                    last = t;
                } else if ord.is_eq() {
                    last = t;
                }
            }
        }
    }
    best.map(|_| ((first + last) / 2) as u8)
}

struct Component {
    area: usize,
    edges: usize,
    min_x: u32,
    min_y: u32,
    max_x: u32,
    max_y: u32,
}

impl Component {
    /// Perimeter estimated from the count of foreground/background pixel
    /// sides, scaled by π/4 (the mean projection factor of a smooth curve).
    fn circularity(&self) -> f64 {
        let perimeter = self.edges as f64 * PI / 4.0;
        4.0 * PI * self.area as f64 / (perimeter * perimeter)
    }
}

fn label_components(mask: &[bool], width: u32, height: u32) -> Vec<Component> {
    let (w, h) = (width as usize, height as usize);
    let mut seen = vec![false; mask.len()];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let is_fg = |x: isize, y: isize| -> bool {
        x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && mask[y as usize * w + x as usize]
    };
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut c = Component {
            area: 0,
            edges: 0,
            min_x: u32::MAX,
            min_y: u32::MAX,
            max_x: 0,
            max_y: 0,
        };
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            c.area += 1;
            c.min_x = c.min_x.min(x as u32);
            c.max_x = c.max_x.max(x as u32);
            c.min_y = c.min_y.min(y as u32);
            c.max_y = c.max_y.max(y as u32);
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                if !is_fg(x + dx, y + dy) {
                    c.edges += 1;
                }
            }
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if is_fg(nx, ny) {
                        let j = ny as usize * w + nx as usize;
                        if !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        comps.push(c);
    }
    comps
}

pub fn blob_detect(patch: &Image, config: &BlobConfig) -> Vec<Detection> {
    let lum = patch.luminance();
    let Some(t) = otsu_threshold(&lum) else {
        return Vec::new();
    };
    let mask: Vec<bool> = lum.iter().map(|&v| v > t).collect();

    let (mut fg_sum, mut fg_n, mut bg_sum) = (0u64, 0u64, 0u64);
    for (&v, &m) in lum.iter().zip(&mask) {
        if m {
            fg_sum += v as u64;
            fg_n += 1;
        } else {
            bg_sum += v as u64;
        }
    }
    let bg_n = lum.len() as u64 - fg_n;
    if fg_n == 0 || bg_n == 0 {
        return Vec::new();
    }
    let contrast = fg_sum as f64 / fg_n as f64 - bg_sum as f64 / bg_n as f64;
    if contrast < config.min_contrast {
        return Vec::new();
    }

    let mut dets: Vec<Detection> = label_components(&mask, patch.width(), patch.height())
        .into_iter()
        .filter(|c| (config.min_area..=config.max_area).contains(&c.area))
        .filter_map(|c| {
            let circ = c.circularity();
            (circ >= config.min_circularity).then(|| Detection {
                bbox: BBox {
                    x: c.min_x as f64,
                    y: c.min_y as f64,
                    w: (c.max_x - c.min_x + 1) as f64,
                    h: (c.max_y - c.min_y + 1) as f64,
                },
                score: circ.clamp(0.0, 1.0),
            })
        })
        .collect();
    sort_by_score(&mut dets);
    dets
}

#[derive(Debug, Clone, Default)]
pub struct BlobDetector {
    pub config: BlobConfig,
}

impl BlobDetector {
    pub fn new(config: BlobConfig) -> Self {
        Self { config }
    }
}

impl Detector for BlobDetector {
    fn detect(&mut self, patch: &Image, _: &DetectContext) -> Result<Vec<Detection>, DetectError> {
        Ok(blob_detect(patch, &self.config))
    }

    fn name(&self) -> &str {
        "blob"
    }
}
