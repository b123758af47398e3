//! Pixel conversions and PNG I/O shared across the pipeline.

use std::fs;
use std::path::Path;

use condgan_autograd::Tensor;
use image::{ImageFormat, RgbImage};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Linear pixel map: 0 → -1, 255 → +1.
pub fn to_unit(v: u8) -> f64 {
    f64::from(v) / 127.5 - 1.0
}

/// Inverse of [`to_unit`], clamped and rounded to the nearest level.
pub fn from_unit(v: f64) -> u8 {
    ((v.clamp(-1.0, 1.0) + 1.0) * 127.5).round() as u8
}

/// Channel-major `[3, h, w]` floats in [-1, 1].
pub fn rgb_to_chw(img: &RgbImage) -> Vec<f64> {
    let (w, h) = img.dimensions();
    let plane = (w * h) as usize;
    let mut out = vec![0.0; 3 * plane];
    for (i, px) in img.pixels().enumerate() {
        for c in 0..3 {
            out[c * plane + i] = to_unit(px.0[c]);
        }
    }
    out
}

pub fn chw_to_rgb(data: &[f64], res: u32) -> RgbImage {
    let plane = (res * res) as usize;
    assert_eq!(data.len(), 3 * plane, "expected a 3×{res}×{res} image");
    RgbImage::from_fn(res, res, |x, y| {
        let i = (y * res + x) as usize;
        image::Rgb([from_unit(data[i]), from_unit(data[plane + i]), from_unit(data[2 * plane + i])])
    })
}

/// Splits an `[n, 3, r, r]` batch into 8-bit images.
pub fn tensor_to_images(batch: &Tensor) -> Vec<RgbImage> {
    let res = batch.dim(2);
    let per = 3 * res * res;
    batch.data().chunks(per).map(|c| chw_to_rgb(c, res as u32)).collect()
}

pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(|source| Error::Image { path: path.to_path_buf(), source })?;
    Ok(img.to_rgb8())
}

pub fn save_png(img: &RgbImage, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|source| Error::Image { path: path.to_path_buf(), source })
}

/// Tiles equally sized images row-major into a `rows × cols` sheet.
pub fn tile(images: &[RgbImage], rows: usize, cols: usize) -> RgbImage {
    assert_eq!(images.len(), rows * cols, "tile needs rows × cols images");
    let (w, h) = images.first().map(|i| i.dimensions()).unwrap_or((0, 0));
    let mut sheet = RgbImage::new(w * cols as u32, h * rows as u32);
    for (i, img) in images.iter().enumerate() {
        let (r, c) = ((i / cols) as u32, (i % cols) as u32);
        image::imageops::replace(&mut sheet, img, i64::from(c * w), i64::from(r * h));
    }
    sheet
}

pub fn normal_tensor(shape: &[usize], rng: &mut impl Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
}

pub fn normal_vec(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_map_endpoints() {
        assert_eq!(to_unit(0), -1.0);
        assert_eq!(to_unit(255), 1.0);
        for v in 0..=255u8 {
            assert_eq!(from_unit(to_unit(v)), v);
        }
    }

    #[test]
    fn tile_layout() {
        let imgs: Vec<RgbImage> = (0..6).map(|i| RgbImage::from_pixel(2, 2, image::Rgb([i, 0, 0]))).collect();
        let sheet = tile(&imgs, 2, 3);
        assert_eq!(sheet.dimensions(), (6, 4));
        assert_eq!(sheet.get_pixel(5, 3).0[0], 5);
        assert_eq!(sheet.get_pixel(2, 0).0[0], 1);
    }
}
