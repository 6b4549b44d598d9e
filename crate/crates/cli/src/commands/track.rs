use std::cell::RefCell;
use std::rc::Rc;
use std::time::Duration;

use anyhow::Context;
use balltrack_core::dataset::{write_detections, write_results, DatasetLayout, ResultRow, RESULTS_FILE};
use balltrack_core::detectors::{BlobConfig, BlobDetector, Detector, ExternClient, OracleDetector, OracleNoise};
use balltrack_core::error::TrackerError;
use balltrack_core::kalman::default_cv_params;
use balltrack_core::metrics::fps_summary;
use balltrack_core::tracker::{run_frames, SelectPolicy, TrackStatus, TrackerConfig};

use crate::args::{DetectorChoice, Policy, TrackArgs};
use crate::failure::{usage, CmdResult, Failure};
use crate::report::fmt_opt;
use crate::wrap::{FailingDetector, Recording};

fn tracker_config(a: &TrackArgs) -> Result<TrackerConfig, Failure> {
    let kalman = default_cv_params(a.q_pos, a.q_vel, a.r_pos).map_err(Failure::usage)?;
    if a.patch_size == 0 {
        return Err(usage!("--patch-size must be positive"));
    }
    if !(0.0..=1.0).contains(&a.min_score) {
        return Err(usage!("--min-score must lie in [0, 1]"));
    }
    if !(a.default_box_size.is_finite() && a.default_box_size > 0.0) {
        return Err(usage!("--default-box-size must be positive"));
    }
    Ok(TrackerConfig {
        patch_size: a.patch_size,
        kalman,
        max_coast: a.max_coast,
        select_policy: match a.select {
            Policy::Nearest => SelectPolicy::NearestToPrediction,
            Policy::Highest => SelectPolicy::HighestScore,
        },
        min_score: a.min_score,
        default_box_size: a.default_box_size,
        stop_on_lost: a.stop_on_lost,
    })
}

fn build_detector(a: &TrackArgs, layout: &DatasetLayout) -> Result<Box<dyn Detector>, Failure> {
    Ok(match &a.detector {
        DetectorChoice::Blob => Box::new(BlobDetector::new(BlobConfig {
            min_area: a.min_area,
            max_area: a.max_area,
            min_circularity: a.min_circularity,
            min_contrast: a.min_contrast,
        })),
        DetectorChoice::Oracle => {
            if layout.annotations.is_none() {
                return Err(usage!("--detector oracle needs {}/annotations.csv", layout.dir.display()));
            }
            let noise = OracleNoise {
                p_detect: a.p_detect,
                sigma_center: a.sigma_center,
                sigma_size: a.sigma_size,
                fp_rate: a.fp_rate,
                seed: a.seed,
            };
            noise.validate().map_err(|e| usage!("{e}"))?;
            Box::new(OracleDetector::new(noise, layout.truth_by_frame()))
        }
        DetectorChoice::Extern(cmd) => {
            match ExternClient::spawn(cmd, Duration::from_millis(a.extern_timeout_ms)) {
                Ok(client) => {
                    log::info!("extern worker `{}` ready", client.worker_name());
                    Box::new(client)
                }
                Err(e) => {
                    log::warn!("extern worker `{cmd}` unavailable: {e}; every frame will report no detection");
                    Box::new(FailingDetector { reason: e.to_string() })
                }
            }
        }
    })
}

pub fn run(a: &TrackArgs) -> CmdResult {
    let config = tracker_config(a)?;
    let layout = DatasetLayout::open(&a.sequence)?;
    if layout.frame_count == 0 {
        return Err(usage!("{} holds no frame_NNNNNN.png files", a.sequence.display()));
    }
    let init = match a.init {
        Some(p) => p,
        None => {
            let first = layout.annotations.as_ref().and_then(|rows| rows.iter().find(|r| r.frame == 0));
            match first {
                Some(r) => r.bbox().center(),
                None => {
                    return Err(usage!(
                        "no frame-0 annotation in {} to initialize from; pass --init x,y",
                        a.sequence.display()
                    ))
                }
            }
        }
    };

    let recorded = Rc::new(RefCell::new(Vec::new()));
    let mut detector = Recording { inner: build_detector(a, &layout)?, rows: Rc::clone(&recorded) };
    let records = run_frames(layout.frames(), &mut detector, &config, init).map_err(|e| match e {
        TrackerError::InitOutsideFrame(_) | TrackerError::Patch(_) => Failure::usage(e),
        other => Failure::Runtime(other.into()),
    })?;
    drop(detector);

    let out = a.out.clone().unwrap_or_else(|| a.sequence.join(RESULTS_FILE));
    let rows: Vec<ResultRow> = records.iter().map(ResultRow::from).collect();
    write_results(&out, &rows).with_context(|| format!("writing {}", out.display()))?;
    if let Some(path) = &a.detections_out {
        write_detections(path, &recorded.borrow())?;
    }

    let count = |s: TrackStatus| records.iter().filter(|r| r.status == s).count();
    println!(
        "{} frames: {} tracked, {} coasting, {} lost; mean fps {}; results in {}",
        records.len(),
        count(TrackStatus::Tracked),
        count(TrackStatus::Coasting),
        count(TrackStatus::Lost),
        fmt_opt(fps_summary(&records).ok(), 1),
        out.display()
    );
    Ok(())
}
