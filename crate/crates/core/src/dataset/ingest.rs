use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::imageops::{self, FilterType};
use image::RgbImage;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::manifest::{DatasetManifest, ImageSource, RecordEntry, MANIFEST_VERSION};
use super::{image_path, pyramid_resolutions};
use crate::error::{invalid, Error, Result};
use crate::imaging::save_png;

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub max_resolution: u32,
    pub seed: u64,
    pub source: ImageSource,
}

impl IngestOptions {
    pub fn new(max_resolution: u32, seed: u64) -> Self {
        Self { max_resolution, seed, source: ImageSource::Corpus }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub manifest: DatasetManifest,
    pub skipped: Vec<SkippedFile>,
}

/// Reads every file directly inside `input`, center-crops it to a square,
/// resizes to `max_resolution` and stores it as `root/r<max>/<id>.png`.
///
/// Files are visited in name order, so the manifest does not depend on
/// directory listing order. Undecodable files are skipped with a warning.
pub fn ingest_images(input: &Path, root: &Path, options: &IngestOptions) -> Result<IngestOutcome> {
    let max = options.max_resolution;
    if pyramid_resolutions(max).is_empty() || !(8..=1024).contains(&max) {
        return Err(invalid(format!("max resolution {max} is not a power of two in [8, 1024]")));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(input)
        .map_err(|e| Error::io(input, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::EmptyDirectory(input.to_path_buf()));
    }

    let decoded: Vec<std::result::Result<(String, RgbImage), String>> = files
        .par_iter()
        .map(|path| {
            let bytes = fs::read(path).map_err(|e| e.to_string())?;
            let img = image::load_from_memory(&bytes).map_err(|e| e.to_string())?;
            Ok((content_id(&bytes), square_resize(&img.to_rgb8(), max)))
        })
        .collect();

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let mut id_uses: HashMap<String, usize> = HashMap::new();
    for (path, result) in files.iter().zip(decoded) {
        let rel = path.strip_prefix(input).unwrap_or(path).to_string_lossy().into_owned();
        match result {
            Ok((hash, img)) => {
                let uses = id_uses.entry(hash.clone()).or_insert(0);
                *uses += 1;
                let id = if *uses == 1 { hash } else { format!("{hash}-{uses}") };
                save_png(&img, &image_path(root, max, &id))?;
                records.push(RecordEntry { id, path: rel, source: options.source, kept: true, drop_reason: None });
            }
            Err(reason) => {
                log::warn!("skipping {}: {reason}", path.display());
                skipped.push(SkippedFile { path: path.clone(), reason });
            }
        }
    }
    if records.is_empty() {
        return Err(Error::EmptyDirectory(input.to_path_buf()));
    }
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        seed: options.seed,
        max_resolution: max,
        resolutions: Vec::new(),
        records,
    };
    Ok(IngestOutcome { manifest, skipped })
}

/// First 16 hex digits of the SHA-256 of the file bytes.
fn content_id(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn square_resize(img: &RgbImage, side: u32) -> RgbImage {
    let (w, h) = img.dimensions();
    let s = w.min(h);
    let cropped = imageops::crop_imm(img, (w - s) / 2, (h - s) / 2, s, s).to_image();
    if s == side {
        cropped
    } else {
        imageops::resize(&cropped, side, side, FilterType::Triangle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crop_is_centered() {
        let mut img = RgbImage::new(6, 4);
        img.put_pixel(1, 0, image::Rgb([255, 0, 0]));
        img.put_pixel(0, 0, image::Rgb([0, 255, 0]));
        let sq = square_resize(&img, 4);
        assert_eq!(sq.dimensions(), (4, 4));
        assert_eq!(sq.get_pixel(0, 0).0, [255, 0, 0]);
    }

    #[test]
    fn ids_are_hex_digests() {
        let id = content_id(b"abc");
        assert_eq!(id, "ba7816bf8f01cfea");
    }
}
