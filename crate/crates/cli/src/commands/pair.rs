use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::CliError;
use crate::manifest::{DatasetManifest, ManifestEntry};
use crate::opts::PairArgs;

const IMAGE_EXTS: [&str; 3] = ["pgm", "png", "pbm"];

fn list_images(dir: &Path) -> Result<BTreeMap<String, PathBuf>, CliError> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir)
        .map_err(|e| CliError::usage(format!("cannot read directory {}: {e}", dir.display())))?
    {
        let path = entry?.path();
        let Some(ext) = path.extension().and_then(|e| e.to_str()) else {
            continue;
        };
        if !IMAGE_EXTS.contains(&ext.to_ascii_lowercase().as_str()) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.insert(stem.to_string(), path);
        }
    }
    Ok(out)
}

/// Pairs inputs with ground truths by filename stem: `<stem>_gt`, `<stem>_GT`
/// or an identical stem in the truths directory. Writes the manifest for
/// review; nothing is evaluated here.
pub fn run(args: PairArgs) -> Result<(), CliError> {
    let inputs = list_images(&args.inputs)?;
    let truths = list_images(&args.truths)?;

    let mut entries = Vec::new();
    let mut unmatched = Vec::new();
    for (stem, input) in &inputs {
        if stem.to_ascii_lowercase().ends_with("_gt") {
            continue;
        }
        let gt = truths
            .get(&format!("{stem}_gt"))
            .or_else(|| truths.get(&format!("{stem}_GT")))
            .or_else(|| truths.get(stem));
        match gt {
            Some(gt_path) => entries.push(ManifestEntry {
                id: stem.clone(),
                input: input.canonicalize()?.display().to_string(),
                ground_truth: gt_path.canonicalize()?.display().to_string(),
            }),
            None => unmatched.push(stem.clone()),
        }
    }
    if entries.is_empty() {
        return Err(CliError::usage(format!(
            "no (input, ground truth) pairs found between {} and {}",
            args.inputs.display(),
            args.truths.display()
        )));
    }
    for stem in &unmatched {
        eprintln!("warning: no ground truth found for '{stem}'");
    }
    DatasetManifest::new(entries.clone()).save(&args.out)?;
    println!(
        "paired {} image(s) ({} unmatched); review {} before evaluating",
        entries.len(),
        unmatched.len(),
        args.out.display()
    );
    Ok(())
}
