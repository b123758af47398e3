use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use thiserror::Error;

use super::image_path;
use super::manifest::{DatasetManifest, ImageRecord};
use crate::error::{invalid, Error, Result};
use crate::imaging::{load_rgb, save_png};

/// Shortest detection that counts as identifiable text.
pub const DEFAULT_MIN_CHARS: usize = 2;

#[derive(Debug, Error)]
#[error("{0}")]
pub struct DetectorError(pub String);

/// Optical character recognition over one image. Must be deterministic.
pub trait TextDetector: Sync {
    fn detect(&self, record: &ImageRecord) -> std::result::Result<String, DetectorError>;
}

/// Detector answering from a JSON `{key: text}` fixture. Keys may be record
/// ids, source paths or source file stems (see [`DatasetManifest::resolve_key`]).
#[derive(Debug, Clone, Default)]
pub struct FixtureDetector {
    texts: BTreeMap<String, String>,
}

impl FixtureDetector {
    pub fn new(texts: BTreeMap<String, String>) -> Self {
        Self { texts }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let texts = serde_json::from_slice(bytes).map_err(|e| Error::json("OCR fixture", e))?;
        Ok(Self { texts })
    }

    /// Rewrites path/stem keys to record ids. Keys matching no record are
    /// dropped with a warning.
    pub fn resolve(self, manifest: &DatasetManifest) -> Self {
        let mut texts = BTreeMap::new();
        for (key, text) in self.texts {
            match manifest.resolve_key(&key) {
                Some(id) => {
                    texts.insert(id.to_string(), text);
                }
                None => log::warn!("OCR fixture key {key:?} matches no record"),
            }
        }
        Self { texts }
    }
}

impl TextDetector for FixtureDetector {
    fn detect(&self, record: &ImageRecord) -> std::result::Result<String, DetectorError> {
        Ok(self.texts.get(&record.id).cloned().unwrap_or_default())
    }
}

/// Runs an external OCR program as `program [args..] <image.png>` and takes
/// its standard output as the detected text.
#[derive(Debug, Clone)]
pub struct CommandDetector {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl TextDetector for CommandDetector {
    fn detect(&self, record: &ImageRecord) -> std::result::Result<String, DetectorError> {
        let dir = tempfile::tempdir().map_err(|e| DetectorError(e.to_string()))?;
        let path = dir.path().join(format!("{}.png", record.id));
        save_png(&record.pixels, &path).map_err(|e| DetectorError(e.to_string()))?;
        let out = Command::new(&self.program)
            .args(&self.args)
            .arg(&path)
            .output()
            .map_err(|e| DetectorError(format!("{}: {e}", self.program.display())))?;
        if !out.status.success() {
            return Err(DetectorError(format!("{} exited with {}", self.program.display(), out.status)));
        }
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    }
}

pub fn count_alphanumeric(text: &str) -> usize {
    text.chars().filter(|c| c.is_alphanumeric()).count()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterStats {
    pub dropped: usize,
    pub detector_failures: usize,
}

/// Marks records whose detected text has at least `min_chars` alphanumeric
/// characters as dropped with reason `"text"`. Detector failures keep the
/// record. Returns a new manifest; already dropped records are left alone.
pub fn filter_text_logos(
    manifest: &DatasetManifest,
    root: &Path,
    detector: &dyn TextDetector,
    min_chars: usize,
) -> Result<(DatasetManifest, FilterStats)> {
    if min_chars == 0 {
        return Err(invalid("min_chars must be at least 1"));
    }
    let mut out = manifest.clone();
    let mut stats = FilterStats::default();
    for entry in out.records.iter_mut().filter(|r| r.kept) {
        let path = image_path(root, manifest.max_resolution, &entry.id);
        if !path.is_file() {
            return Err(Error::MissingFile { id: entry.id.clone(), path });
        }
        let record = ImageRecord::new(entry.id.clone(), load_rgb(&path)?, entry.source)?;
        match detector.detect(&record) {
            Ok(text) if count_alphanumeric(&text) >= min_chars => {
                entry.kept = false;
                entry.drop_reason = Some("text".to_string());
                stats.dropped += 1;
            }
            Ok(_) => {}
            Err(e) => {
                log::warn!("text detection failed for {}, keeping it: {e}", entry.id);
                stats.detector_failures += 1;
            }
        }
    }
    Ok((out, stats))
}
