//! On-disk sequence layout and CSV record formats.
//!
//! A sequence directory holds `frame_000000.png`, `frame_000001.png`, … with
//! consecutive indices from zero, plus `annotations.csv` with header
//! `frame,x,y,w,h`. Frames without a visible ball have no annotation row.
//! Tracker output goes to `results.csv` with header
//! `frame,x,y,w,h,score,status,elapsed_ms`. Raw per-frame detections, one row
//! per box, use `frame,x,y,w,h,score`, and augmentation patches are listed as
//! `file,row,col,window_x,window_y,x,y,w,h` with the ball box in patch
//! coordinates.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::DatasetError;
use crate::geometry::{BBox, Detection};
use crate::patching::CropWindow;
use crate::raster::Image;
use crate::synth::Sequence;
use crate::tracker::{TrackRecord, TrackStatus};

pub const ANNOTATIONS_FILE: &str = "annotations.csv";
pub const RESULTS_FILE: &str = "results.csv";
pub const ANNOTATION_HEADER: [&str; 5] = ["frame", "x", "y", "w", "h"];
pub const RESULT_HEADER: [&str; 8] = ["frame", "x", "y", "w", "h", "score", "status", "elapsed_ms"];
pub const DETECTION_HEADER: [&str; 6] = ["frame", "x", "y", "w", "h", "score"];
pub const PATCH_HEADER: [&str; 9] = ["file", "row", "col", "window_x", "window_y", "x", "y", "w", "h"];

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:06}.png")
}

fn parse_frame_file_name(name: &str) -> Option<usize> {
    let digits = name.strip_prefix("frame_")?.strip_suffix(".png")?;
    (digits.len() >= 6 && digits.bytes().all(|b| b.is_ascii_digit())).then(|| digits.parse().ok())?
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRow {
    pub frame: usize,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl AnnotationRow {
    pub fn new(frame: usize, b: &BBox) -> Self {
        Self { frame, x: b.x, y: b.y, w: b.w, h: b.h }
    }

    pub fn bbox(&self) -> BBox {
        BBox { x: self.x, y: self.y, w: self.w, h: self.h }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub frame: usize,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub score: f64,
    pub status: TrackStatus,
    pub elapsed_ms: f64,
}

impl ResultRow {
    pub fn bbox(&self) -> BBox {
        BBox { x: self.x, y: self.y, w: self.w, h: self.h }
    }
}

impl From<&TrackRecord> for ResultRow {
    fn from(r: &TrackRecord) -> Self {
        let b = r.output_bbox;
        Self {
            frame: r.frame_index,
            x: b.x,
            y: b.y,
            w: b.w,
            h: b.h,
            score: r.detection_used.map_or(0.0, |d| d.score),
            status: r.status,
            elapsed_ms: r.elapsed_ms(),
        }
    }
}

/// One raw detection in frame coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub frame: usize,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub score: f64,
}

impl DetectionRow {
    pub fn new(frame: usize, d: &Detection) -> Self {
        Self { frame, x: d.bbox.x, y: d.bbox.y, w: d.bbox.w, h: d.bbox.h, score: d.score }
    }

    pub fn detection(&self) -> Detection {
        Detection { bbox: BBox { x: self.x, y: self.y, w: self.w, h: self.h }, score: self.score }
    }
}

/// One augmentation patch and the ball box inside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchRow {
    pub file: String,
    pub row: u8,
    pub col: u8,
    pub window_x: u32,
    pub window_y: u32,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl PatchRow {
    pub fn window(&self, size: u32) -> CropWindow {
        CropWindow { x: self.window_x, y: self.window_y, size }
    }

    pub fn bbox(&self) -> BBox {
        BBox { x: self.x, y: self.y, w: self.w, h: self.h }
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> DatasetError + '_ {
    move |source| DatasetError::Csv { path: path.to_owned(), source }
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<(), DatasetError> {
    if rows.is_empty() {
        // csv only emits the header with the first record
        return fs::write(path, format!("{}\n", header.join(",")))
            .map_err(|source| DatasetError::Io { path: path.to_owned(), source });
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| DatasetError::Io { path: path.to_owned(), source })
}

/// Reads rows, insisting on the exact header.
fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path, header: &[&str]) -> Result<Vec<T>, DatasetError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(csv_err(path))?;
    let found = r.headers().map_err(csv_err(path))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(DatasetError::Format {
            path: path.to_owned(),
            message: format!("expected header `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        });
    }
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(csv_err(path))
}

pub fn write_annotations(path: &Path, rows: &[AnnotationRow]) -> Result<(), DatasetError> {
    write_csv(path, &ANNOTATION_HEADER, rows)
}

pub fn read_annotations(path: &Path) -> Result<Vec<AnnotationRow>, DatasetError> {
    let rows: Vec<AnnotationRow> = read_csv(path, &ANNOTATION_HEADER)?;
    for row in &rows {
        row.bbox().validate().map_err(|e| DatasetError::Format {
            path: path.to_owned(),
            message: format!("frame {}: {e}", row.frame),
        })?;
    }
    Ok(rows)
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<(), DatasetError> {
    write_csv(path, &RESULT_HEADER, rows)
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, DatasetError> {
    read_csv(path, &RESULT_HEADER)
}

pub fn write_detections(path: &Path, rows: &[DetectionRow]) -> Result<(), DatasetError> {
    write_csv(path, &DETECTION_HEADER, rows)
}

pub fn read_detections(path: &Path) -> Result<Vec<DetectionRow>, DatasetError> {
    let rows: Vec<DetectionRow> = read_csv(path, &DETECTION_HEADER)?;
    for row in &rows {
        Detection::new(row.detection().bbox, row.score).map_err(|e| DatasetError::Format {
            path: path.to_owned(),
            message: format!("frame {}: {e}", row.frame),
        })?;
    }
    Ok(rows)
}

pub fn write_patches(path: &Path, rows: &[PatchRow]) -> Result<(), DatasetError> {
    write_csv(path, &PATCH_HEADER, rows)
}

pub fn read_patches(path: &Path) -> Result<Vec<PatchRow>, DatasetError> {
    read_csv(path, &PATCH_HEADER)
}

/// Spreads annotation rows over `n_frames` slots.
pub fn annotations_by_frame(rows: &[AnnotationRow], n_frames: usize) -> Vec<Option<BBox>> {
    let mut out = vec![None; n_frames];
    for r in rows {
        if let Some(slot) = out.get_mut(r.frame) {
            *slot = Some(r.bbox());
        }
    }
    out
}

/// Writes frames and annotations into `dir`, creating it if needed.
pub fn write_sequence(dir: &Path, seq: &Sequence) -> Result<(), DatasetError> {
    fs::create_dir_all(dir).map_err(|source| DatasetError::Io { path: dir.to_owned(), source })?;
    for (i, frame) in seq.frames.iter().enumerate() {
        frame.save_png(&dir.join(frame_file_name(i)))?;
    }
    let rows: Vec<AnnotationRow> = seq
        .annotations
        .iter()
        .enumerate()
        .filter_map(|(i, a)| a.as_ref().map(|b| AnnotationRow::new(i, b)))
        .collect();
    write_annotations(&dir.join(ANNOTATIONS_FILE), &rows)
}

/// A validated sequence directory. Frames are loaded lazily.
#[derive(Debug, Clone)]
pub struct DatasetLayout {
    pub dir: PathBuf,
    pub frame_count: usize,
    /// `None` when the directory has no annotations file.
    pub annotations: Option<Vec<AnnotationRow>>,
}

impl DatasetLayout {
    pub fn open(dir: &Path) -> Result<Self, DatasetError> {
        let entries = fs::read_dir(dir).map_err(|source| DatasetError::Io { path: dir.to_owned(), source })?;
        let mut indices = BTreeSet::new();
        for entry in entries {
            let entry = entry.map_err(|source| DatasetError::Io { path: dir.to_owned(), source })?;
            if let Some(i) = entry.file_name().to_str().and_then(parse_frame_file_name) {
                indices.insert(i);
            }
        }
        let frame_count = indices.len();
        if let Some(gap) = indices.iter().enumerate().find(|(k, &i)| *k != i).map(|(k, _)| k) {
            return Err(DatasetError::Format {
                path: dir.to_owned(),
                message: format!("frame indices are not consecutive from 0: missing {}", frame_file_name(gap)),
            });
        }
        let ann_path = dir.join(ANNOTATIONS_FILE);
        let annotations = if ann_path.exists() {
            let rows = read_annotations(&ann_path)?;
            if let Some(bad) = rows.iter().find(|r| r.frame >= frame_count) {
                return Err(DatasetError::Format {
                    path: ann_path,
                    message: format!("annotation for frame {} but only {frame_count} frames", bad.frame),
                });
            }
            Some(rows)
        } else {
            None
        };
        Ok(Self { dir: dir.to_owned(), frame_count, annotations })
    }

    pub fn frame_path(&self, index: usize) -> PathBuf {
        self.dir.join(frame_file_name(index))
    }

    pub fn load_frame(&self, index: usize) -> Result<Image, DatasetError> {
        Image::load_png(&self.frame_path(index))
    }

    pub fn frames(&self) -> impl Iterator<Item = Result<Image, DatasetError>> + '_ {
        (0..self.frame_count).map(|i| self.load_frame(i))
    }

    pub fn truth_by_frame(&self) -> Vec<Option<BBox>> {
        annotations_by_frame(self.annotations.as_deref().unwrap_or(&[]), self.frame_count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_names() {
        assert_eq!(frame_file_name(7), "frame_000007.png");
        assert_eq!(parse_frame_file_name("frame_000123.png"), Some(123));
        assert_eq!(parse_frame_file_name("frame_1234567.png"), Some(1234567));
        assert_eq!(parse_frame_file_name("frame_12.png"), None);
        assert_eq!(parse_frame_file_name("patch_000001.png"), None);
    }

    #[test]
    fn result_csv_shape() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let row = ResultRow {
            frame: 3,
            x: 1.5,
            y: 2.0,
            w: 10.0,
            h: 10.0,
            score: 0.875,
            status: TrackStatus::Coasting,
            elapsed_ms: 12.25,
        };
        write_results(&p, &[row]).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text, "frame,x,y,w,h,score,status,elapsed_ms\n3,1.5,2.0,10.0,10.0,0.875,COASTING,12.25\n");
        assert_eq!(read_results(&p).unwrap(), vec![row]);
    }

    #[test]
    fn header_is_required() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        fs::write(&p, "0,1,2,3,4\n").unwrap();
        assert!(matches!(read_annotations(&p), Err(DatasetError::Format { .. })));
        fs::write(&p, "frame,x,y,w,h\n0,1,2,0,4\n").unwrap();
        assert!(matches!(read_annotations(&p), Err(DatasetError::Format { .. })));
    }

    #[test]
    fn detection_and_patch_rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let rows = vec![
            DetectionRow { frame: 0, x: 1.25, y: 2.0, w: 3.0, h: 4.0, score: 0.5 },
            DetectionRow { frame: 0, x: 0.1, y: 0.2, w: 0.3, h: 0.4, score: 1.0 },
        ];
        write_detections(&p, &rows).unwrap();
        assert_eq!(read_detections(&p).unwrap(), rows);
        fs::write(&p, "frame,x,y,w,h,score\n0,1,1,2,2,1.5\n").unwrap();
        assert!(matches!(read_detections(&p), Err(DatasetError::Format { .. })));

        let q = dir.path().join("p.csv");
        let patch = PatchRow {
            file: "patch_00.png".into(),
            row: 0,
            col: 0,
            window_x: 10,
            window_y: 20,
            x: 5.5,
            y: 6.5,
            w: 8.0,
            h: 8.0,
        };
        write_patches(&q, std::slice::from_ref(&patch)).unwrap();
        assert_eq!(read_patches(&q).unwrap(), vec![patch]);
    }

    #[test]
    fn empty_annotations_keep_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_annotations(&p, &[]).unwrap();
        assert_eq!(read_annotations(&p).unwrap(), vec![]);
    }

    #[test]
    fn layout_checks_consecutive_frames() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image::filled(4, 4, 1, 0);
        img.save_png(&dir.path().join(frame_file_name(0))).unwrap();
        img.save_png(&dir.path().join(frame_file_name(2))).unwrap();
        assert!(matches!(DatasetLayout::open(dir.path()), Err(DatasetError::Format { .. })));
        img.save_png(&dir.path().join(frame_file_name(1))).unwrap();
        let layout = DatasetLayout::open(dir.path()).unwrap();
        assert_eq!(layout.frame_count, 3);
        assert!(layout.annotations.is_none());
        write_annotations(&dir.path().join(ANNOTATIONS_FILE), &[AnnotationRow { frame: 5, x: 0.0, y: 0.0, w: 1.0, h: 1.0 }])
            .unwrap();
        assert!(DatasetLayout::open(dir.path()).is_err());
    }
}
