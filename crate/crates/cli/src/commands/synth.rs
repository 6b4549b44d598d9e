use anyhow::Context;
use balltrack_core::dataset::write_sequence;
use balltrack_core::synth::{generate, PuttParams, SequenceParams, SwingParams};

use crate::args::{Kind, SynthArgs};
use crate::failure::{usage, CmdResult};

fn params(a: &SynthArgs) -> Result<SequenceParams, crate::failure::Failure> {
    let swing_only = [
        ("--angle", a.angle.is_some()),
        ("--gravity", a.gravity.is_some()),
        ("--depth-rate", a.depth_rate.is_some()),
        ("--blur", a.blur.is_some()),
    ];
    let putt_only = [("--heading", a.heading.is_some()), ("--friction", a.friction.is_some())];
    match a.kind {
        Kind::Swing => {
            if let Some((flag, _)) = putt_only.iter().find(|f| f.1) {
                return Err(usage!("{flag} only applies to --kind putt"));
            }
            let d = SwingParams::default();
            let mut dims = d.frame_dims;
            dims.width = a.width.unwrap_or(dims.width);
            dims.height = a.height.unwrap_or(dims.height);
            Ok(SequenceParams::Swing(SwingParams {
                start: a.start.unwrap_or(d.start),
                v0: a.v0.unwrap_or(d.v0),
                angle: a.angle.unwrap_or(d.angle),
                gravity: a.gravity.unwrap_or(d.gravity),
                depth_rate: a.depth_rate.unwrap_or(d.depth_rate),
                r0: a.radius.unwrap_or(d.r0),
                frames: a.frames.unwrap_or(d.frames),
                frame_dims: dims,
                noise_sigma: a.noise.unwrap_or(d.noise_sigma),
                blur_samples: a.blur.unwrap_or(d.blur_samples),
                seed: a.seed,
            }))
        }
        Kind::Putt => {
            if let Some((flag, _)) = swing_only.iter().find(|f| f.1) {
                return Err(usage!("{flag} only applies to --kind swing"));
            }
            let d = PuttParams::default();
            let mut dims = d.frame_dims;
            dims.width = a.width.unwrap_or(dims.width);
            dims.height = a.height.unwrap_or(dims.height);
            Ok(SequenceParams::Putt(PuttParams {
                start: a.start.unwrap_or(d.start),
                v0: a.v0.unwrap_or(d.v0),
                heading: a.heading.unwrap_or(d.heading),
                friction: a.friction.unwrap_or(d.friction),
                r: a.radius.unwrap_or(d.r),
                frames: a.frames.unwrap_or(d.frames),
                frame_dims: dims,
                noise_sigma: a.noise.unwrap_or(d.noise_sigma),
                seed: a.seed,
            }))
        }
    }
}

pub fn run(a: &SynthArgs) -> CmdResult {
    let p = params(a)?;
    let seq = generate(&p).map_err(|e| usage!("{e}"))?;
    write_sequence(&a.out, &seq).with_context(|| format!("writing {}", a.out.display()))?;
    let sizes: Vec<f64> = seq.annotations.iter().flatten().map(|b| b.w).collect();
    let annotated = sizes.len();
    print!("wrote {} frames to {} ({annotated} annotated", seq.len(), a.out.display());
    if annotated > 0 {
        let (lo, hi) = sizes.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        print!(", ball {lo:.1} to {hi:.1} px");
    }
    println!(")");
    Ok(())
}
