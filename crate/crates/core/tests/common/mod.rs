//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use balltrack_core::geometry::{BBox, Detection};
use balltrack_core::metrics::DetectionEvalInput;

/// Integer box `(x, y, w, h)` as the set of pixels `[x, x+w) × [y, y+h)`.
#[derive(Debug, Clone, Copy)]
pub struct PixelBox {
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
}

impl PixelBox {
    pub fn bbox(&self) -> BBox {
        BBox { x: self.x as f64, y: self.y as f64, w: self.w as f64, h: self.h as f64 }
    }

    fn contains(&self, px: i64, py: i64) -> bool {
        px >= self.x && px < self.x + self.w && py >= self.y && py < self.y + self.h
    }
}

/// IoU by counting pixels one at a time.
pub fn pixel_count_iou(a: &PixelBox, b: &PixelBox) -> f64 {
    let x0 = a.x.min(b.x);
    let y0 = a.y.min(b.y);
    let x1 = (a.x + a.w).max(b.x + b.w);
    let y1 = (a.y + a.h).max(b.y + b.h);
    let (mut inter, mut union) = (0u64, 0u64);
    for py in y0..y1 {
        for px in x0..x1 {
            let (ia, ib) = (a.contains(px, py), b.contains(px, py));
            inter += (ia && ib) as u64;
            union += (ia || ib) as u64;
        }
    }
    inter as f64 / union as f64
}

fn overlap(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let ih = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    inter / (a.w * a.h + b.w * b.h - inter)
}

/// True-positive count among the top `k` ranked detections, matching from
/// scratch for this cut.
fn tp_at_cut(input: &DetectionEvalInput, ranked: &[(usize, Detection)], k: usize, thr: f64) -> usize {
    let mut used: Vec<Vec<bool>> = input.images.iter().map(|im| vec![false; im.truths.len()]).collect();
    let mut tp = 0;
    for (img, det) in &ranked[..k] {
        let mut best: Option<(usize, f64)> = None;
        for (g, t) in input.images[*img].truths.iter().enumerate() {
            if used[*img][g] {
                continue;
            }
            let v = overlap(&det.bbox, t);
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((g, v));
            }
        }
        if let Some((g, v)) = best {
            if v >= thr {
                used[*img][g] = true;
                tp += 1;
            }
        }
    }
    tp
}

/// AP by enumerating every score cut and integrating the interpolated
/// precision over each distinct recall level.
pub fn brute_force_ap(input: &DetectionEvalInput, thr: f64) -> f64 {
    let n_truth: usize = input.images.iter().map(|im| im.truths.len()).sum();
    let mut ranked: Vec<(usize, Detection)> = Vec::new();
    for (i, im) in input.images.iter().enumerate() {
        for d in &im.detections {
            ranked.push((i, *d));
        }
    }
    // stable: ties keep input order
    ranked.sort_by(|a, b| b.1.score.partial_cmp(&a.1.score).unwrap());

    let cuts: Vec<(f64, f64)> = (1..=ranked.len())
        .map(|k| {
            let tp = tp_at_cut(input, &ranked, k, thr) as f64;
            (tp / n_truth as f64, tp / k as f64)
        })
        .collect();
    let mut levels: Vec<f64> = cuts.iter().map(|c| c.0).filter(|&r| r > 0.0).collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();
    let mut area = 0.0;
    let mut prev = 0.0;
    for r in levels {
        let p = cuts.iter().filter(|c| c.0 >= r).map(|c| c.1).fold(0.0, f64::max);
        area += (r - prev) * p;
        prev = r;
    }
    area
}

/// Centroid of the pixel centers covered by `b`, by enumeration.
pub fn pixel_centroid(b: &PixelBox) -> (f64, f64) {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
    for py in b.y..b.y + b.h {
        for px in b.x..b.x + b.w {
            sx += px as f64 + 0.5;
            sy += py as f64 + 0.5;
            n += 1.0;
        }
    }
    (sx / n, sy / n)
}
