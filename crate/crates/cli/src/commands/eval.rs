use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context};
use balltrack_core::dataset::{read_annotations, read_detections, read_results, ANNOTATIONS_FILE, RESULTS_FILE};
use balltrack_core::metrics::{
    average_fps, average_precision, precision_curve, success_auc, DetectionEvalInput, FramePair, ImageDetections,
    MetricsReport, TrackingEvalInput, DEFAULT_AP_THRESHOLDS,
};
use balltrack_core::tracker::TrackStatus;

use crate::args::{EvalArgs, EvalMode};
use crate::failure::{usage, CmdResult, Failure};
use crate::report::{fmt_opt, table, Style};

pub const DETECTIONS_FILE: &str = "detections.csv";
/// Precision curve thresholds written to the curves file, px.
const CURVE_MAX_PX: u32 = 50;

struct Job {
    name: String,
    annotations: PathBuf,
    input: PathBuf,
}

struct Evaluated {
    name: String,
    frames: usize,
    report: MetricsReport,
    precision_curve: Vec<(f64, f64)>,
}

fn evaluate_track(job: &Job, thresholds: &[f64]) -> anyhow::Result<Evaluated> {
    let truths: BTreeMap<usize, _> =
        read_annotations(&job.annotations)?.into_iter().map(|r| (r.frame, r.bbox())).collect();
    let results = read_results(&job.input)?;
    let pairs: Vec<FramePair> = results
        .iter()
        .filter_map(|r| {
            let truth = *truths.get(&r.frame)?;
            Some(FramePair { output: (r.status != TrackStatus::Lost).then(|| r.bbox()), truth })
        })
        .collect();
    if pairs.is_empty() {
        bail!("{} and {} share no annotated frames", job.input.display(), job.annotations.display());
    }
    let input = TrackingEvalInput { pairs };
    let curve_thresholds: Vec<f64> = (0..=CURVE_MAX_PX).map(f64::from).collect();
    let success = success_auc(&input)?;
    let total_ms: f64 = results.iter().map(|r| r.elapsed_ms).sum();
    Ok(Evaluated {
        name: job.name.clone(),
        frames: input.pairs.len(),
        report: MetricsReport {
            ap_by_threshold: Vec::new(),
            precision_at: precision_curve(&input, thresholds)?,
            success_curve: success.samples,
            success_auc: Some(success.auc),
            mean_fps: (total_ms > 0.0).then(|| results.len() as f64 / (total_ms / 1000.0)),
        },
        precision_curve: precision_curve(&input, &curve_thresholds)?,
    })
}

fn evaluate_detect(job: &Job, ious: &[f64]) -> anyhow::Result<Evaluated> {
    let truths = read_annotations(&job.annotations)?;
    let dets = read_detections(&job.input)?;
    let frames: BTreeSet<usize> = truths.iter().map(|r| r.frame).chain(dets.iter().map(|d| d.frame)).collect();
    let index: BTreeMap<usize, usize> = frames.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let mut images = vec![ImageDetections::default(); frames.len()];
    for t in &truths {
        images[index[&t.frame]].truths.push(t.bbox());
    }
    for d in &dets {
        images[index[&d.frame]].detections.push(d.detection());
    }
    let input = DetectionEvalInput { images };
    let ap_by_threshold = ious
        .iter()
        .map(|&thr| average_precision(&input, thr).map(|ap| (thr, ap)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Evaluated {
        name: job.name.clone(),
        frames: frames.len(),
        report: MetricsReport { ap_by_threshold, ..Default::default() },
        precision_curve: Vec::new(),
    })
}

fn jobs(a: &EvalArgs) -> Result<Vec<Job>, Failure> {
    let input_file = match a.mode {
        EvalMode::Track => RESULTS_FILE,
        EvalMode::Detect => DETECTIONS_FILE,
    };
    if a.sequences.is_empty() {
        let annotations = a.annotations.clone().ok_or_else(|| usage!("pass sequence directories or --annotations"))?;
        let input = match a.mode {
            EvalMode::Track => a.results.clone().ok_or_else(|| usage!("track mode needs --results"))?,
            EvalMode::Detect => a.detections.clone().ok_or_else(|| usage!("detect mode needs --detections"))?,
        };
        let name = input.display().to_string();
        return Ok(vec![Job { name, annotations, input }]);
    }
    if a.annotations.is_some() || a.results.is_some() || a.detections.is_some() {
        return Err(usage!("--annotations/--results/--detections cannot be combined with sequence directories"));
    }
    Ok(a.sequences
        .iter()
        .map(|dir| Job {
            name: dir.display().to_string(),
            annotations: dir.join(ANNOTATIONS_FILE),
            input: dir.join(input_file),
        })
        .collect())
}

/// Runs `f` over `items` on up to `n` threads, keeping input order.
fn parallel_map<T: Sync, R: Send>(items: &[T], n: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if n <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..n.min(items.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                *slots[i].lock().expect("result slot") = Some(f(item));
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("result slot").expect("every item evaluated")).collect()
}

fn fmt_px(t: f64) -> String {
    if t.fract() == 0.0 {
        format!("{t:.0}")
    } else {
        format!("{t}")
    }
}

fn write_curves(path: &Path, evaluated: &[Evaluated], batch: bool) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let mut header = vec!["kind", "threshold", "value"];
    if batch {
        header.insert(0, "sequence");
    }
    w.write_record(&header)?;
    for e in evaluated {
        let rows = e
            .precision_curve
            .iter()
            .map(|&(t, v)| ("precision", fmt_px(t), v))
            .chain(e.report.success_curve.iter().map(|&(t, v)| ("success", format!("{t:.2}"), v)));
        for (kind, t, v) in rows {
            let value = format!("{v}");
            let mut rec = vec![kind, t.as_str(), value.as_str()];
            if batch {
                rec.insert(0, e.name.as_str());
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn mean(vals: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = vals.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn print_track(style: Style, evaluated: &[Evaluated], thresholds: &[f64]) {
    let mut header = vec!["sequence".to_owned(), "frames".to_owned()];
    header.extend(thresholds.iter().map(|t| format!("P@{}px", fmt_px(*t))));
    header.extend(["AUC".to_owned(), "fps".to_owned()]);
    let mut rows: Vec<Vec<String>> = evaluated
        .iter()
        .map(|e| {
            let mut row = vec![e.name.clone(), e.frames.to_string()];
            row.extend(e.report.precision_at.iter().map(|p| format!("{:.3}", p.1)));
            row.push(fmt_opt(e.report.success_auc, 3));
            row.push(fmt_opt(e.report.mean_fps, 1));
            row
        })
        .collect();
    if evaluated.len() > 1 {
        let mut avg = vec!["average".to_owned(), String::new()];
        for i in 0..thresholds.len() {
            avg.push(fmt_opt(mean(evaluated.iter().map(|e| e.report.precision_at[i].1)), 3));
        }
        avg.push(fmt_opt(mean(evaluated.iter().filter_map(|e| e.report.success_auc)), 3));
        let fps: Vec<f64> = evaluated.iter().filter_map(|e| e.report.mean_fps).collect();
        avg.push(fmt_opt(average_fps(&fps), 1));
        rows.push(avg);
    }
    print!("{}", table(style, &header, &rows));
}

fn print_detect(style: Style, evaluated: &[Evaluated], ious: &[f64]) {
    let mut header = vec!["sequence".to_owned(), "images".to_owned()];
    header.extend(ious.iter().map(|t| format!("AP@{t}")));
    let mut rows: Vec<Vec<String>> = evaluated
        .iter()
        .map(|e| {
            let mut row = vec![e.name.clone(), e.frames.to_string()];
            row.extend(e.report.ap_by_threshold.iter().map(|p| format!("{:.4}", p.1)));
            row
        })
        .collect();
    if evaluated.len() > 1 {
        let mut avg = vec!["average".to_owned(), String::new()];
        for i in 0..ious.len() {
            avg.push(fmt_opt(mean(evaluated.iter().map(|e| e.report.ap_by_threshold[i].1)), 4));
        }
        rows.push(avg);
    }
    print!("{}", table(style, &header, &rows));
}

pub fn run(a: &EvalArgs, style: Style) -> CmdResult {
    if a.jobs == 0 {
        return Err(usage!("--jobs must be at least 1"));
    }
    let thresholds = &a.thresholds.0;
    if thresholds.is_empty() || thresholds.iter().any(|t| *t < 0.0) {
        return Err(usage!("--thresholds needs one or more non-negative pixel distances"));
    }
    let mut ious: Vec<f64> = DEFAULT_AP_THRESHOLDS.to_vec();
    for &t in &a.iou.0 {
        if !(t > 0.0 && t < 1.0) {
            return Err(usage!("IoU threshold {t} must lie in (0, 1)"));
        }
        if !ious.contains(&t) {
            ious.push(t);
        }
    }
    ious.sort_by(f64::total_cmp);
    if a.mode == EvalMode::Detect && a.curves.is_some() {
        return Err(usage!("--curves applies to track mode"));
    }

    let jobs = jobs(a)?;
    let evaluated: Vec<Evaluated> = parallel_map(&jobs, a.jobs, |job| {
        match a.mode {
            EvalMode::Track => evaluate_track(job, thresholds),
            EvalMode::Detect => evaluate_detect(job, &ious),
        }
        .with_context(|| format!("evaluating {}", job.name))
    })
    .into_iter()
    .collect::<anyhow::Result<_>>()?;

    match a.mode {
        EvalMode::Track => print_track(style, &evaluated, thresholds),
        EvalMode::Detect => print_detect(style, &evaluated, &ious),
    }
    let batch = !a.sequences.is_empty();
    if let Some(path) = &a.curves {
        write_curves(path, &evaluated, batch)?;
    }
    if let Some(path) = &a.json {
        let value = if batch {
            let seqs: Vec<serde_json::Value> =
                evaluated.iter().map(|e| serde_json::json!({ "sequence": e.name, "report": e.report })).collect();
            serde_json::json!({ "sequences": seqs })
        } else {
            serde_json::to_value(&evaluated[0].report).context("encoding report")?
        };
        let text = serde_json::to_string_pretty(&value).context("encoding report")?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
