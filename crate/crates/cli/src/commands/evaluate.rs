use std::time::Instant;

use rayon::prelude::*;
use robin_core::{evaluate_pair, load_image, load_mask};

use crate::error::CliError;
use crate::manifest::{DatasetManifest, ResolvedEntry};
use crate::opts::{EvaluateArgs, Method, ProposedOpts, ReportFormat, WindowOpts};
use crate::report::{mean_row, render_csv, render_json, Row, RowData};

use super::run::{run_method, validate_method_flags};

pub fn run(args: EvaluateArgs) -> Result<(), CliError> {
    let mut methods = Vec::new();
    for m in &args.methods {
        if !methods.contains(m) {
            methods.push(*m);
        }
    }
    validate_method_flags(&methods, &args.proposed, &args.windowed)?;
    let (_, entries) = DatasetManifest::load(&args.manifest)?;
    if entries.is_empty() {
        return Err(CliError::usage("manifest has no entries".to_string()));
    }
    std::fs::create_dir_all(&args.out)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::usage(format!("cannot build worker pool: {e}")))?;

    let mut summaries = Vec::new();
    for method in methods {
        let rows: Vec<Row> = pool.install(|| {
            entries
                .par_iter()
                .map(|entry| process(entry, method, &args.proposed, &args.windowed, &args))
                .collect()
        });
        let errors = rows.iter().filter(|r| r.outcome.is_err()).count();
        for row in rows.iter().filter(|r| r.outcome.is_err()) {
            let msg = row.outcome.as_ref().err().unwrap();
            log::warn!("{}: {}", row.id, msg);
            eprintln!("warning: {} ({}): {}", row.id, method, msg);
        }

        let (name, text) = match args.report {
            ReportFormat::Csv => (format!("report_{method}.csv"), render_csv(&rows)),
            ReportFormat::Json => (format!("report_{method}.json"), render_json(&method.to_string(), &rows)),
        };
        let path = args.out.join(name);
        std::fs::write(&path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        println!("{method}: report written to {}", path.display());
        summaries.push((method, mean_row(&rows), rows.len(), errors));
    }

    // Summary table over methods, mirroring the dataset-table layout.
    println!("\nmethod      FM       pFM      PSNR     DRD      MPM      images  errors");
    for (method, mean, total, errors) in &summaries {
        match mean {
            Some(m) => println!(
                "{:<10} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.5} {:>6} {:>7}",
                method.to_string(),
                m.fm,
                m.pfm,
                m.psnr,
                m.drd,
                m.mpm,
                total,
                errors
            ),
            None => println!(
                "{:<10} {:>8} {:>8} {:>8} {:>8} {:>8} {:>6} {:>7}",
                method.to_string(),
                "-",
                "-",
                "-",
                "-",
                "-",
                total,
                errors
            ),
        }
    }
    Ok(())
}

fn process(
    entry: &ResolvedEntry,
    method: Method,
    proposed: &ProposedOpts,
    windowed: &WindowOpts,
    args: &EvaluateArgs,
) -> Row {
    let start = Instant::now();
    let outcome = (|| -> Result<RowData, CliError> {
        let mut img = load_image::<f64>(&entry.input)?;
        if args.invert {
            img = img.invert();
        }
        let run = run_method(&img, method, proposed, windowed)?;
        let gt = load_mask(&entry.ground_truth)?;
        let metrics = evaluate_pair::<f64>(&run.mask, &gt)?;
        Ok(RowData {
            fm: metrics.fm,
            pfm: metrics.pfm,
            psnr: metrics.psnr,
            drd: metrics.drd,
            mpm: metrics.mpm,
            tau: run.tau,
            stages: run.stages.len(),
            seconds: if args.no_timing {
                0.0
            } else {
                start.elapsed().as_secs_f64()
            },
        })
    })();
    Row {
        id: entry.id.clone(),
        outcome: outcome.map_err(|e| e.to_string()),
    }
}
