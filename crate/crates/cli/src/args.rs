//! Command-line grammar and config-file expansion.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context};
use balltrack_core::geometry::{BBox, Point2};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use crate::failure::Failure;

pub const SUBCOMMANDS: [&str; 4] = ["synth", "augment", "track", "eval"];

#[derive(Debug, Parser)]
#[command(name = "balltrack", version, about = "Small-ball tracking by detection: synthesize, augment, track, evaluate")]
pub struct Cli {
    /// File of `key=value` lines used as defaults for the subcommand's flags.
    /// Keys are long flag names without the dashes; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    /// Only log errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic sequence with annotations.
    #[command(args_override_self = true)]
    Synth(SynthArgs),
    /// Cut the shifted 3x3 grid of training patches around a ball.
    #[command(args_override_self = true)]
    Augment(AugmentArgs),
    /// Track the ball through a sequence directory.
    #[command(args_override_self = true)]
    Track(TrackArgs),
    /// Score tracking results or raw detections against annotations.
    #[command(args_override_self = true)]
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Swing,
    Putt,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = Kind::Swing)]
    pub kind: Kind,
    /// Output sequence directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    /// Std-dev of additive Gaussian pixel noise.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Ball center in frame 0, as `x,y`.
    #[arg(long, value_parser = parse_point)]
    pub start: Option<Point2>,
    /// Initial speed, px/frame.
    #[arg(long)]
    pub v0: Option<f64>,
    /// Ball radius in frame 0, px.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Launch angle above horizontal, degrees (swing).
    #[arg(long)]
    pub angle: Option<f64>,
    /// Downward acceleration, px/frame² (swing).
    #[arg(long)]
    pub gravity: Option<f64>,
    /// Per-frame radius multiplier (swing).
    #[arg(long)]
    pub depth_rate: Option<f64>,
    /// Exposure sub-samples per frame for motion blur (swing).
    #[arg(long)]
    pub blur: Option<usize>,
    /// Direction of travel, degrees (putt).
    #[arg(long)]
    pub heading: Option<f64>,
    /// Deceleration, px/frame² (putt).
    #[arg(long)]
    pub friction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Source frame (PNG).
    #[arg(long)]
    pub image: PathBuf,
    /// Ball box in frame coordinates, as `x,y,w,h`.
    #[arg(long, value_parser = parse_bbox)]
    pub bbox: BBox,
    #[arg(long, default_value_t = balltrack_core::patching::DEFAULT_AUGMENT_SHIFT)]
    pub shift: u32,
    #[arg(long, default_value_t = balltrack_core::patching::DEFAULT_PATCH_SIZE)]
    pub size: u32,
    /// Output directory for `patch_<row><col>.png` and `patches.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DetectorChoice {
    Blob,
    Oracle,
    Extern(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    /// Detection closest to the predicted center.
    Nearest,
    /// Highest-scoring detection.
    Highest,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Sequence directory (frames plus optional annotations.csv).
    pub sequence: PathBuf,
    /// Results file; defaults to `<sequence>/results.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write every raw detection, in frame coordinates.
    #[arg(long, value_name = "FILE")]
    pub detections_out: Option<PathBuf>,

    /// `blob`, `oracle`, or `extern:<command>`.
    #[arg(long, default_value = "blob", value_parser = parse_detector)]
    pub detector: DetectorChoice,
    /// Start from the frame-0 annotation (default).
    #[arg(long, overrides_with = "init")]
    pub init_from_gt: bool,
    /// Start from an explicit center, as `x,y`.
    #[arg(long, value_parser = parse_point, overrides_with = "init_from_gt")]
    pub init: Option<Point2>,

    #[arg(long, default_value_t = balltrack_core::patching::DEFAULT_PATCH_SIZE)]
    pub patch_size: u32,
    #[arg(long, default_value_t = 5)]
    pub max_coast: u32,
    #[arg(long, value_enum, default_value_t = Policy::Nearest)]
    pub select: Policy,
    #[arg(long, default_value_t = 0.25)]
    pub min_score: f64,
    #[arg(long, default_value_t = 16.0)]
    pub default_box_size: f64,
    /// Stop at the first lost frame instead of predicting to the end.
    #[arg(long, num_args = 0..=1, default_value_t = false, default_missing_value = "true", action = ArgAction::Set)]
    pub stop_on_lost: bool,
    #[arg(long, default_value_t = balltrack_core::kalman::DEFAULT_Q_POS)]
    pub q_pos: f64,
    #[arg(long, default_value_t = balltrack_core::kalman::DEFAULT_Q_VEL)]
    pub q_vel: f64,
    #[arg(long, default_value_t = balltrack_core::kalman::DEFAULT_R_POS)]
    pub r_pos: f64,

    #[arg(long, default_value_t = 9)]
    pub min_area: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_area: usize,
    #[arg(long, default_value_t = 0.6)]
    pub min_circularity: f64,
    #[arg(long, default_value_t = 20.0)]
    pub min_contrast: f64,

    #[arg(long, default_value_t = 1.0)]
    pub p_detect: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma_center: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma_size: f64,
    #[arg(long, default_value_t = 0.0)]
    pub fp_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Per-request timeout for extern workers.
    #[arg(long, default_value_t = 5000)]
    pub extern_timeout_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    Track,
    Detect,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Sequence directories to evaluate as a batch. Each needs
    /// `annotations.csv` plus `results.csv` (track) or `detections.csv` (detect).
    pub sequences: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = EvalMode::Track)]
    pub mode: EvalMode,
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long)]
    pub results: Option<PathBuf>,
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// CLE thresholds in px for the precision summary.
    #[arg(long, default_value = "1,2,5", value_parser = parse_list)]
    pub thresholds: FloatList,
    /// IoU thresholds added to 0.25 and 0.5 in detect mode.
    #[arg(long, default_value = "", value_parser = parse_list)]
    pub iou: FloatList,
    /// Write the precision and success curves as `kind,threshold,value`.
    #[arg(long, value_name = "FILE")]
    pub curves: Option<PathBuf>,
    /// Write the report as JSON.
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
    /// Worker threads for batch evaluation.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

fn parse_floats(s: &str, n: Option<usize>) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    let vals = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(n) = n {
        if vals.len() != n {
            return Err(format!("expected {n} comma-separated numbers, got {}", vals.len()));
        }
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err("values must be finite".into());
    }
    Ok(vals)
}

pub fn parse_point(s: &str) -> Result<Point2, String> {
    let v = parse_floats(s, Some(2))?;
    Ok(Point2::new(v[0], v[1]))
}

pub fn parse_bbox(s: &str) -> Result<BBox, String> {
    let v = parse_floats(s, Some(4))?;
    BBox::new(v[0], v[1], v[2], v[3]).map_err(|e| e.to_string())
}

/// A comma-separated list taken as one value, so a later flag replaces it.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

pub fn parse_list(s: &str) -> Result<FloatList, String> {
    parse_floats(s, None).map(FloatList)
}

pub fn parse_detector(s: &str) -> Result<DetectorChoice, String> {
    match s {
        "blob" => Ok(DetectorChoice::Blob),
        "oracle" => Ok(DetectorChoice::Oracle),
        _ => match s.strip_prefix("extern:") {
            Some(cmd) if !cmd.trim().is_empty() => Ok(DetectorChoice::Extern(cmd.to_owned())),
            Some(_) => Err("extern: needs a worker command".into()),
            None => Err(format!("unknown detector `{s}`; use blob, oracle or extern:<command>")),
        },
    }
}

/// Finds `--config FILE` or `--config=FILE` before any `--`.
fn find_config(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            return None;
        }
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// Turns config lines into `--key=value` arguments.
fn config_args(text: &str) -> anyhow::Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key=value", n + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
            bail!("line {}: bad key `{}`", n + 1, key);
        }
        if key == "config" {
            bail!("line {}: config files cannot include other config files", n + 1);
        }
        out.push(format!("--{key}={}", value.trim()).into());
    }
    Ok(out)
}

/// Splices config-file flags in right after the subcommand name so that
/// flags given on the command line, which come later, take precedence.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let Some(path) = find_config(&argv) else {
        return Ok(argv);
    };
    let Some(sub) = argv.iter().position(|a| SUBCOMMANDS.iter().any(|s| a == s)) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path)
        .with_context(|| format!("reading config {}", PathBuf::from(&path).display()))
        .map_err(Failure::Runtime)?;
    let extra = config_args(&text)
        .with_context(|| format!("config {}", PathBuf::from(&path).display()))
        .map_err(Failure::Usage)?;
    let mut out = argv;
    out.splice(sub + 1..sub + 1, extra);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_detector_choices() {
        assert_eq!(parse_detector("blob"), Ok(DetectorChoice::Blob));
        assert_eq!(parse_detector("extern:python3 w.py --x"), Ok(DetectorChoice::Extern("python3 w.py --x".into())));
        assert!(parse_detector("extern:").is_err());
        assert!(parse_detector("yolo").is_err());
    }

    #[test]
    fn parses_numbers() {
        assert_eq!(parse_point("1.5, -2").unwrap(), Point2::new(1.5, -2.0));
        assert!(parse_point("1").is_err());
        assert!(parse_bbox("0,0,0,3").is_err());
        assert_eq!(parse_list("").unwrap(), FloatList(vec![]));
        assert!(parse_list("1,nan").is_err());
    }

    #[test]
    fn config_lines() {
        let args = config_args("# comment\n\nmax_coast = 3\nstop-on-lost=true\n").unwrap();
        assert_eq!(args, os(&["--max-coast=3", "--stop-on-lost=true"]));
        assert!(config_args("nokey\n").is_err());
        assert!(config_args("config=x\n").is_err());
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.txt");
        fs::write(&cfg, "max-coast=3\nmin-score=0.5\ndetector=oracle\n").unwrap();
        let argv = os(&["balltrack", "track", "--config", cfg.to_str().unwrap(), "seq", "--max-coast", "7"]);
        let cli = Cli::try_parse_from(expand_config(argv).unwrap()).unwrap();
        let Command::Track(t) = cli.command else { panic!("not track") };
        assert_eq!(t.max_coast, 7);
        assert_eq!(t.min_score, 0.5);
        assert_eq!(t.detector, DetectorChoice::Oracle);
    }

    #[test]
    fn init_flags_override_each_other() {
        let cli = Cli::try_parse_from(os(&["b", "track", "s", "--init", "3,4", "--init-from-gt"])).unwrap();
        let Command::Track(t) = cli.command else { panic!() };
        assert!(t.init.is_none() && t.init_from_gt);
        let cli = Cli::try_parse_from(os(&["b", "track", "s", "--init-from-gt", "--init", "3,4"])).unwrap();
        let Command::Track(t) = cli.command else { panic!() };
        assert_eq!(t.init, Some(Point2::new(3.0, 4.0)));
    }

    #[test]
    fn list_flags_replace() {
        let cli = Cli::try_parse_from(os(&["b", "eval", "--thresholds", "1", "--thresholds", "3,4"])).unwrap();
        let Command::Eval(e) = cli.command else { panic!() };
        assert_eq!(e.thresholds, FloatList(vec![3.0, 4.0]));
    }
}
