//! Dataset manifests: explicit id -> (input, ground truth) pairing stored as
//! JSON next to the data. Pairing is never inferred silently at evaluation
//! time; the `pair` subcommand exists to write a manifest for review from a
//! filename convention.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const MANIFEST_SCHEMA: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema: u32,
    /// Optional prefix applied to entry paths, relative to the manifest dir.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<String>,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub input: String,
    pub ground_truth: String,
}

/// An entry with its paths resolved against the manifest location.
#[derive(Clone, Debug)]
pub struct ResolvedEntry {
    pub id: String,
    pub input: PathBuf,
    pub ground_truth: PathBuf,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Self {
        DatasetManifest {
            schema: MANIFEST_SCHEMA,
            root: None,
            entries,
        }
    }

    /// Loads and validates a manifest: ids must be unique and every
    /// referenced file must exist.
    pub fn load(path: &Path) -> Result<(Self, Vec<ResolvedEntry>), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read manifest {}: {e}", path.display())))?;
        let manifest: DatasetManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("malformed manifest {}: {e}", path.display())))?;
        if manifest.schema != MANIFEST_SCHEMA {
            return Err(CliError::usage(format!(
                "unsupported manifest schema {} (expected {MANIFEST_SCHEMA})",
                manifest.schema
            )));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let base = match &manifest.root {
            Some(root) => base.join(root),
            None => base.to_path_buf(),
        };

        let mut seen = BTreeSet::new();
        let mut resolved = Vec::with_capacity(manifest.entries.len());
        for entry in &manifest.entries {
            if !seen.insert(entry.id.clone()) {
                return Err(CliError::usage(format!(
                    "duplicate manifest id '{}'",
                    entry.id
                )));
            }
            let input = base.join(&entry.input);
            let ground_truth = base.join(&entry.ground_truth);
            for file in [&input, &ground_truth] {
                if !file.is_file() {
                    return Err(CliError::usage(format!(
                        "manifest entry '{}' references missing file {}",
                        entry.id,
                        file.display()
                    )));
                }
            }
            resolved.push(ResolvedEntry {
                id: entry.id.clone(),
                input,
                ground_truth,
            });
        }
        resolved.sort_by(|a, b| a.id.cmp(&b.id));
        Ok((manifest, resolved))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Io(format!("cannot serialize manifest: {e}")))?;
        text.push('\n');
        std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}
