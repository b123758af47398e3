use std::collections::HashSet;
use std::fs;
use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageSource {
    Corpus,
    Boost,
    Synthetic,
}

/// One square training image held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub id: String,
    pub pixels: RgbImage,
    pub source: ImageSource,
}

impl ImageRecord {
    /// Checks the square, power-of-two (≥ 4) shape invariant.
    pub fn new(id: impl Into<String>, pixels: RgbImage, source: ImageSource) -> Result<Self> {
        let (w, h) = pixels.dimensions();
        if w != h || w < 4 || !w.is_power_of_two() {
            return Err(invalid(format!("image must be square with a power-of-two side ≥ 4, got {w}×{h}")));
        }
        Ok(Self { id: id.into(), pixels, source })
    }

    pub fn resolution(&self) -> u32 {
        self.pixels.width()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordEntry {
    pub id: String,
    /// Source file, relative to the ingested directory.
    pub path: String,
    pub source: ImageSource,
    pub kept: bool,
    #[serde(default)]
    pub drop_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub version: u32,
    pub seed: u64,
    pub max_resolution: u32,
    /// Empty until the pyramid has been built; afterwards 4, 8, …, max.
    pub resolutions: Vec<u32>,
    pub records: Vec<RecordEntry>,
}

impl DatasetManifest {
    pub fn kept(&self) -> impl Iterator<Item = &RecordEntry> {
        self.records.iter().filter(|r| r.kept)
    }

    pub fn kept_count(&self) -> usize {
        self.kept().count()
    }

    pub fn dropped_count(&self) -> usize {
        self.records.len() - self.kept_count()
    }

    pub fn record(&self, id: &str) -> Option<&RecordEntry> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Maps a fixture key to a record id: either the id itself, the source
    /// path, or the source file name without extension.
    pub fn resolve_key(&self, key: &str) -> Option<&str> {
        self.records
            .iter()
            .find(|r| r.id == key)
            .or_else(|| self.records.iter().find(|r| r.path == key))
            .or_else(|| {
                self.records.iter().find(|r| Path::new(&r.path).file_stem().and_then(|s| s.to_str()) == Some(key))
            })
            .map(|r| r.id.as_str())
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(invalid(format!("unsupported manifest version {}", self.version)));
        }
        if !(8..=1024).contains(&self.max_resolution) || !self.max_resolution.is_power_of_two() {
            return Err(invalid(format!("max_resolution {} is not a power of two in [8, 1024]", self.max_resolution)));
        }
        if !self.resolutions.is_empty() {
            let expected = super::pyramid_resolutions(self.max_resolution);
            if self.resolutions != expected {
                return Err(invalid(format!("resolutions {:?} should be {:?}", self.resolutions, expected)));
            }
        }
        let mut seen = HashSet::new();
        for r in &self.records {
            if r.id.is_empty() || r.id.contains(['/', '\\']) || r.id.starts_with('.') {
                return Err(invalid(format!("bad record id {:?}", r.id)));
            }
            if !seen.insert(r.id.as_str()) {
                return Err(invalid(format!("duplicate record id {}", r.id)));
            }
            if r.kept && r.drop_reason.is_some() {
                return Err(invalid(format!("record {} is kept but has a drop reason", r.id)));
            }
        }
        Ok(())
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let m: Self = serde_json::from_slice(bytes).map_err(|e| Error::json("manifest", e))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_FILE);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        Self::from_json(&bytes)
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        let path = root.join(MANIFEST_FILE);
        fs::write(&path, self.to_json()).map_err(|e| Error::io(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest() -> DatasetManifest {
        DatasetManifest {
            version: MANIFEST_VERSION,
            seed: 3,
            max_resolution: 8,
            resolutions: vec![4, 8],
            records: vec![RecordEntry {
                id: "abc".into(),
                path: "logos/a.png".into(),
                source: ImageSource::Corpus,
                kept: true,
                drop_reason: None,
            }],
        }
    }

    #[test]
    fn json_round_trip() {
        let m = manifest();
        assert_eq!(DatasetManifest::from_json(m.to_json().as_bytes()).unwrap(), m);
    }

    #[test]
    fn rejects_duplicates_and_bad_resolutions() {
        let mut m = manifest();
        m.records.push(m.records[0].clone());
        assert!(m.validate().is_err());
        let mut m = manifest();
        m.resolutions = vec![8, 4];
        assert!(m.validate().is_err());
        let mut m = manifest();
        m.records[0].id = "../x".into();
        assert!(m.validate().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = manifest().to_json().replace("\"seed\"", "\"extra\": 1, \"seed\"");
        assert!(DatasetManifest::from_json(text.as_bytes()).is_err());
    }

    #[test]
    fn resolves_fixture_keys() {
        let m = manifest();
        assert_eq!(m.resolve_key("abc"), Some("abc"));
        assert_eq!(m.resolve_key("logos/a.png"), Some("abc"));
        assert_eq!(m.resolve_key("a"), Some("abc"));
        assert_eq!(m.resolve_key("b"), None);
    }

    #[test]
    fn image_record_shape_invariant() {
        assert!(ImageRecord::new("x", RgbImage::new(8, 8), ImageSource::Corpus).is_ok());
        assert!(ImageRecord::new("x", RgbImage::new(8, 4), ImageSource::Corpus).is_err());
        assert!(ImageRecord::new("x", RgbImage::new(6, 6), ImageSource::Corpus).is_err());
        assert!(ImageRecord::new("x", RgbImage::new(2, 2), ImageSource::Corpus).is_err());
    }
}
