//! Square crop windows around a predicted position, coordinate mapping
//! between patch and frame, and the shifted 3×3 augmentation grid.

use serde::{Deserialize, Serialize};

use crate::error::PatchError;
use crate::geometry::{BBox, Detection, Point2};

pub const DEFAULT_PATCH_SIZE: u32 = 416;
pub const DEFAULT_AUGMENT_SHIFT: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameDims {
    pub width: u32,
    pub height: u32,
}

impl FrameDims {
    pub const fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn bounds(&self) -> BBox {
        BBox { x: 0.0, y: 0.0, w: self.width as f64, h: self.height as f64 }
    }

    pub fn contains_point(&self, p: &Point2) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x < self.width as f64 && p.y < self.height as f64
    }
}

/// A `size`×`size` raster window whose top-left corner sits at integer pixel
/// `(x, y)` in the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CropWindow {
    pub x: u32,
    pub y: u32,
    pub size: u32,
}

impl CropWindow {
    pub fn origin(&self) -> Point2 {
        Point2::new(self.x as f64, self.y as f64)
    }

    pub fn bbox(&self) -> BBox {
        BBox { x: self.x as f64, y: self.y as f64, w: self.size as f64, h: self.size as f64 }
    }

    pub fn dims(&self) -> FrameDims {
        FrameDims::new(self.size, self.size)
    }

    pub fn box_to_frame(&self, b: &BBox) -> BBox {
        b.translate(self.x as f64, self.y as f64)
    }

    pub fn box_to_patch(&self, b: &BBox) -> BBox {
        b.translate(-(self.x as f64), -(self.y as f64))
    }
}

fn check_fits(frame: FrameDims, size: u32) -> Result<(), PatchError> {
    if size == 0 {
        return Err(PatchError::ZeroSize);
    }
    if frame.width < size || frame.height < size {
        return Err(PatchError::FrameTooSmall { width: frame.width, height: frame.height, size });
    }
    Ok(())
}

fn clamp_origin(center: f64, extent: u32, size: u32) -> u32 {
    let origin = center.round() - (size / 2) as f64;
    origin.clamp(0.0, (extent - size) as f64) as u32
}

/// Window of side `size` centered at the rounded `center`, shifted as needed to
/// lie entirely inside the frame.
pub fn crop_window(center: Point2, frame: FrameDims, size: u32) -> Result<CropWindow, PatchError> {
    check_fits(frame, size)?;
    // NaN centers clamp to the top-left corner.
    let cx = if center.x.is_finite() { center.x } else { 0.0 };
    let cy = if center.y.is_finite() { center.y } else { 0.0 };
    Ok(CropWindow {
        x: clamp_origin(cx, frame.width, size),
        y: clamp_origin(cy, frame.height, size),
        size,
    })
}

pub fn to_frame(d: &Detection, w: &CropWindow) -> Detection {
    Detection { bbox: w.box_to_frame(&d.bbox), score: d.score }
}

pub fn to_patch(d: &Detection, w: &CropWindow) -> Detection {
    Detection { bbox: w.box_to_patch(&d.bbox), score: d.score }
}

/// One window of the augmentation grid, tagged with its grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPatch {
    /// 0 = shifted up, 1 = centered, 2 = shifted down.
    pub row: u8,
    /// 0 = shifted left, 1 = centered, 2 = shifted right.
    pub col: u8,
    pub window: CropWindow,
}

/// Windows centered on the ball shifted by `{-shift, 0, +shift}` on each axis.
///
/// Windows are clamped into the frame; any that no longer fully contain the
/// ball are dropped, and windows clamped onto an already emitted origin are
/// skipped. Order is row-major over `(dy, dx)`.
pub fn augment9(
    ball: &BBox,
    frame: FrameDims,
    size: u32,
    shift: u32,
) -> Result<Vec<GridPatch>, PatchError> {
    check_fits(frame, size)?;
    if !frame.bounds().contains(ball) {
        return Err(PatchError::BallOutsideFrame(*ball));
    }
    let c = ball.center();
    let s = shift as f64;
    let mut out: Vec<GridPatch> = Vec::with_capacity(9);
    for (row, dy) in [-s, 0.0, s].into_iter().enumerate() {
        for (col, dx) in [-s, 0.0, s].into_iter().enumerate() {
            let window = crop_window(Point2::new(c.x + dx, c.y + dy), frame, size)?;
            if !window.bbox().contains(ball) {
                continue;
            }
            if out.iter().any(|g| g.window.x == window.x && g.window.y == window.y) {
                continue;
            }
            out.push(GridPatch { row: row as u8, col: col as u8, window });
        }
    }
    Ok(out)
}
