use std::fs;
use std::path::Path;

use super::ingest::{ingest_images, IngestOptions, SkippedFile};
use super::manifest::{DatasetManifest, MANIFEST_FILE};
use super::ocr::{filter_text_logos, FilterStats, FixtureDetector, TextDetector};
use super::pyramid::build_multiresolution;
use super::image_path;
use crate::error::{invalid, Error, Result};
use crate::labels::{CLUSTERS_FILE, LABELS_FILE};

/// Where detected text comes from.
pub enum TextFilter<'a> {
    /// Keep every decodable image.
    Off,
    Detector(&'a dyn TextDetector),
    /// Keys are resolved against the ingested manifest before filtering.
    Fixture(FixtureDetector),
}

pub struct PrepareOptions<'a> {
    pub ingest: IngestOptions,
    pub filter: TextFilter<'a>,
    pub min_chars: usize,
    /// Replace an existing dataset at the output path.
    pub force: bool,
}

#[derive(Debug, Clone)]
pub struct PrepareOutcome {
    pub manifest: DatasetManifest,
    pub skipped: Vec<SkippedFile>,
    pub filter: FilterStats,
}

/// Clears `out` for a new dataset. A non-empty directory is only replaced
/// with `force`, and only if it already holds a dataset.
fn claim_output(out: &Path, force: bool) -> Result<()> {
    let occupied = out.is_dir() && fs::read_dir(out).map_err(|e| Error::io(out, e))?.next().is_some();
    if !occupied {
        return Ok(());
    }
    if !force {
        return Err(invalid(format!("{} already exists; pass --force to replace it", out.display())));
    }
    if !out.join(MANIFEST_FILE).is_file() {
        return Err(invalid(format!("{} is not a dataset directory; refusing to replace it", out.display())));
    }
    for entry in fs::read_dir(out).map_err(|e| Error::io(out, e))? {
        let path = entry.map_err(|e| Error::io(out, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let is_level = path.is_dir() && name.strip_prefix('r').is_some_and(|n| n.parse::<u32>().is_ok());
        if is_level {
            fs::remove_dir_all(&path).map_err(|e| Error::io(&path, e))?;
        }
    }
    // labels from an earlier run name records that may no longer exist
    for name in [MANIFEST_FILE, LABELS_FILE, CLUSTERS_FILE] {
        let path = out.join(name);
        if path.is_file() {
            fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}

/// Ingest, filter text-heavy images, build the pyramid, write the manifest.
pub fn prepare_dataset(input: &Path, out: &Path, options: &PrepareOptions<'_>) -> Result<PrepareOutcome> {
    if !input.is_dir() {
        return Err(invalid(format!("input directory {} does not exist", input.display())));
    }
    claim_output(out, options.force)?;
    let ingested = ingest_images(input, out, &options.ingest)?;
    let (manifest, filter) = match &options.filter {
        TextFilter::Off => (ingested.manifest, FilterStats::default()),
        TextFilter::Detector(d) => filter_text_logos(&ingested.manifest, out, *d, options.min_chars)?,
        TextFilter::Fixture(f) => {
            let resolved = f.clone().resolve(&ingested.manifest);
            filter_text_logos(&ingested.manifest, out, &resolved, options.min_chars)?
        }
    };
    // only kept records belong in the pyramid
    for r in manifest.records.iter().filter(|r| !r.kept) {
        let path = image_path(out, manifest.max_resolution, &r.id);
        if path.is_file() {
            fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
        }
    }
    let manifest = build_multiresolution(&manifest, out)?;
    manifest.save(out)?;
    Ok(PrepareOutcome { manifest, skipped: ingested.skipped, filter })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_shapes, ShapeClass};

    fn options(force: bool, filter: TextFilter<'_>) -> PrepareOptions<'_> {
        PrepareOptions { ingest: IngestOptions::new(8, 0), filter, min_chars: 2, force }
    }

    #[test]
    fn fixture_keys_are_file_stems() {
        let tmp = tempfile::tempdir().unwrap();
        let src = tmp.path().join("src");
        generate_shapes(&src, &[ShapeClass::red_circle()], 3, 8, 0).unwrap();
        let texts = [("red_circle_0001".to_string(), "ACME".to_string())].into();
        let out = prepare_dataset(&src, &tmp.path().join("ds"), &options(false, TextFilter::Fixture(FixtureDetector::new(texts))))
            .unwrap();
        assert_eq!(out.manifest.kept_count(), 2);
        assert_eq!(out.filter.dropped, 1);
        let dropped = out.manifest.records.iter().find(|r| !r.kept).unwrap();
        assert_eq!(dropped.path, "red_circle_0001.png");
        assert_eq!(dropped.drop_reason.as_deref(), Some("text"));
        assert!(!image_path(&tmp.path().join("ds"), 8, &dropped.id).exists());
    }

    #[test]
    fn rerun_needs_force_and_a_dataset() {
        let tmp = tempfile::tempdir().unwrap();
        let src = tmp.path().join("src");
        generate_shapes(&src, &[ShapeClass::blue_square()], 2, 8, 0).unwrap();
        let ds = tmp.path().join("ds");
        prepare_dataset(&src, &ds, &options(false, TextFilter::Off)).unwrap();
        let err = prepare_dataset(&src, &ds, &options(false, TextFilter::Off)).unwrap_err();
        assert!(err.to_string().contains("--force"), "{err}");
        fs::write(ds.join(LABELS_FILE), "id,cluster\n").unwrap();
        prepare_dataset(&src, &ds, &options(true, TextFilter::Off)).unwrap();
        assert!(!ds.join(LABELS_FILE).exists());

        let other = tmp.path().join("other");
        fs::create_dir_all(&other).unwrap();
        fs::write(other.join("notes.txt"), "keep me").unwrap();
        assert!(prepare_dataset(&src, &other, &options(true, TextFilter::Off)).is_err());
        assert!(other.join("notes.txt").is_file());
    }
}
