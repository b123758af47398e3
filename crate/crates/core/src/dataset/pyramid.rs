use std::path::Path;

use image::RgbImage;
use rayon::prelude::*;

use super::image_path;
use super::manifest::DatasetManifest;
use crate::error::{Error, Result};
use crate::imaging::{load_rgb, save_png};

/// 4, 8, …, `max`; empty if `max` is not a power of two ≥ 4.
pub fn pyramid_resolutions(max: u32) -> Vec<u32> {
    if max < 4 || !max.is_power_of_two() {
        return Vec::new();
    }
    std::iter::successors(Some(4u32), |r| Some(r * 2)).take_while(|&r| r <= max).collect()
}

/// Halves each side by averaging 2×2 blocks, rounding half up.
pub fn box_downsample(img: &RgbImage) -> RgbImage {
    let (w, h) = img.dimensions();
    RgbImage::from_fn(w / 2, h / 2, |x, y| {
        let mut px = [0u8; 3];
        for (c, out) in px.iter_mut().enumerate() {
            let sum: u32 = [(0, 0), (1, 0), (0, 1), (1, 1)]
                .iter()
                .map(|&(dx, dy)| u32::from(img.get_pixel(2 * x + dx, 2 * y + dy).0[c]))
                .sum();
            *out = ((sum + 2) / 4) as u8;
        }
        image::Rgb(px)
    })
}

/// Writes every lower resolution of each kept record by repeated 2× box
/// downsampling from the stored maximum-resolution image.
pub fn build_multiresolution(manifest: &DatasetManifest, root: &Path) -> Result<DatasetManifest> {
    let max = manifest.max_resolution;
    let kept: Vec<&str> = manifest.kept().map(|r| r.id.as_str()).collect();
    kept.par_iter()
        .map(|id| {
            let src = image_path(root, max, id);
            if !src.is_file() {
                return Err(Error::MissingFile { id: id.to_string(), path: src });
            }
            let mut img = load_rgb(&src)?;
            while img.width() > 4 {
                img = box_downsample(&img);
                save_png(&img, &image_path(root, img.width(), id))?;
            }
            Ok(())
        })
        .collect::<Result<Vec<()>>>()?;
    let mut out = manifest.clone();
    out.resolutions = pyramid_resolutions(max);
    Ok(out)
}
