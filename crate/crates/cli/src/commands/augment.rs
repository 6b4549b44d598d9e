use std::fs;

use anyhow::Context;
use balltrack_core::dataset::{write_patches, PatchRow};
use balltrack_core::error::PatchError;
use balltrack_core::patching::augment9;
use balltrack_core::raster::Image;

use crate::args::AugmentArgs;
use crate::failure::{usage, CmdResult};

pub fn patch_file_name(row: u8, col: u8) -> String {
    format!("patch_{row}{col}.png")
}

pub fn run(a: &AugmentArgs) -> CmdResult {
    let frame = Image::load_png(&a.image)?;
    let grid = augment9(&a.bbox, frame.dims(), a.size, a.shift).map_err(|e| match e {
        PatchError::BallOutsideFrame(_) => usage!(
            "bbox {},{},{},{} is not inside the {}x{} image",
            a.bbox.x,
            a.bbox.y,
            a.bbox.w,
            a.bbox.h,
            frame.width(),
            frame.height()
        ),
        other => usage!("{other}"),
    })?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut rows = Vec::with_capacity(grid.len());
    for g in &grid {
        let file = patch_file_name(g.row, g.col);
        frame.crop(&g.window).save_png(&a.out.join(&file))?;
        let local = g.window.box_to_patch(&a.bbox);
        rows.push(PatchRow {
            file,
            row: g.row,
            col: g.col,
            window_x: g.window.x,
            window_y: g.window.y,
            x: local.x,
            y: local.y,
            w: local.w,
            h: local.h,
        });
    }
    write_patches(&a.out.join("patches.csv"), &rows)?;
    println!("wrote {} patches of {}x{} to {}", rows.len(), a.size, a.size, a.out.display());
    Ok(())
}
