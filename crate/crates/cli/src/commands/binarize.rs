use std::path::Path;
use std::time::Instant;

use robin_core::ndarray::Array2;
use robin_core::raster::{write_pbm, write_pgm, write_png_mask};
use robin_core::{load_image, GrayImage, Scale};

use crate::error::CliError;
use crate::opts::{BinarizeArgs, FitScale, MaskFormat, Method};
use crate::report::{Sidecar, REPORT_SCHEMA};

use super::run::{run_method, validate_method_flags};

/// Min-max rescale of an arbitrary surface onto the raw scale for viewing.
fn viewable(surface: &Array2<f64>) -> (GrayImage, f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in surface.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let data = surface.mapv(|v| (v - lo) / span * 255.0);
    (
        GrayImage::new(data, Scale::Raw).expect("rescaled surface in range"),
        lo,
        hi,
    )
}

pub fn run(args: BinarizeArgs) -> Result<(), CliError> {
    validate_method_flags(&[args.method], &args.proposed, &args.windowed)?;
    if !args.input.is_file() {
        return Err(CliError::usage(format!(
            "input file not found: {}",
            args.input.display()
        )));
    }
    std::fs::create_dir_all(&args.out)?;
    let stem = args
        .input
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("output")
        .to_string();

    let start = Instant::now();
    let mut img = load_image::<f64>(&args.input)?;
    if args.invert {
        img = img.invert();
    }
    log::info!(
        "loaded {} ({}x{}), method {}",
        args.input.display(),
        img.rows(),
        img.cols(),
        args.method
    );
    let outcome = run_method(&img, args.method, &args.proposed, &args.windowed)?;

    let mask_path = match args.mask_format {
        MaskFormat::Pbm => {
            let p = args.out.join(format!("{stem}_mask.pbm"));
            write_pbm(&outcome.mask, &p)?;
            p
        }
        MaskFormat::Png => {
            let p = args.out.join(format!("{stem}_mask.png"));
            write_png_mask(&outcome.mask, &p)?;
            p
        }
    };

    let mut background_range = (None, None);
    let mut subtracted_range = (None, None);
    if let Some(bg) = &outcome.background {
        let (viz, lo, hi) = viewable(bg);
        write_pgm(&viz, args.out.join(format!("{stem}_background.pgm")), 255)?;
        background_range = (Some(lo), Some(hi));
    }
    if let Some(sub) = &outcome.subtracted {
        let (viz, lo, hi) = viewable(sub.values());
        write_pgm(&viz, args.out.join(format!("{stem}_subtracted.pgm")), 255)?;
        subtracted_range = (Some(lo), Some(hi));
    }

    let sidecar = Sidecar {
        schema: REPORT_SCHEMA,
        input: args.input.display().to_string(),
        method: args.method.to_string(),
        rows: img.rows(),
        cols: img.cols(),
        inverted: args.invert,
        fit_scale: outcome.fit_scale.map(|s| {
            match s {
                FitScale::Unit => "unit",
                FitScale::Raw => "raw",
            }
            .to_string()
        }),
        tau: outcome.tau,
        stages: if args.method == Method::Proposed {
            Some(outcome.stages.clone())
        } else {
            None
        },
        subtracted_min: subtracted_range.0,
        subtracted_max: subtracted_range.1,
        background_min: background_range.0,
        background_max: background_range.1,
        degenerate: outcome.degenerate,
        window: outcome.window,
        k: outcome.k,
        foreground_fraction: outcome.mask.foreground_fraction(),
        seconds: start.elapsed().as_secs_f64(),
    };
    let sidecar_path = args.out.join(format!("{stem}.json"));
    write_json(&sidecar_path, &sidecar)?;

    match outcome.tau {
        Some(tau) => println!(
            "{}: tau {tau:.6}, foreground {:.2}% -> {}",
            args.method,
            sidecar.foreground_fraction * 100.0,
            mask_path.display()
        ),
        None => println!(
            "{}: foreground {:.2}% -> {}",
            args.method,
            sidecar.foreground_fraction * 100.0,
            mask_path.display()
        ),
    }
    Ok(())
}

fn write_json(path: &Path, sidecar: &Sidecar) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(sidecar)
        .map_err(|e| CliError::Io(format!("cannot serialize sidecar: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}
