use image::imageops::{self, FilterType};
use image::RgbImage;

use super::EmbeddingPoint;
use crate::dataset::ImageRecord;
use crate::error::{Error, Result};
use crate::imaging::{normal_vec, rgb_to_chw};
use crate::rng;

pub const FEATURE_DIM: usize = 512;

/// Image → fixed-length feature vector. Must be deterministic.
pub trait FeatureExtractor: Sync {
    fn dim(&self) -> usize;
    /// Stable identifier recorded in reports.
    fn name(&self) -> String;
    fn extract(&self, pixels: &RgbImage) -> std::result::Result<Vec<f64>, String>;
}

const GRID: usize = 8;
const INPUTS: usize = 3 * GRID * GRID;

/// Seeded random projection of the 8×8 average-pooled image to 512 values.
///
/// Stands in for a pretrained CNN so everything runs offline. Distances
/// between features approximate distances between the pooled images, so
/// flat color dominates.
#[derive(Debug, Clone)]
pub struct ToyFeatureExtractor {
    seed: u64,
    /// `FEATURE_DIM × INPUTS`, row-major.
    projection: Vec<f64>,
}

impl ToyFeatureExtractor {
    pub const DEFAULT_SEED: u64 = 0x5EED;

    pub fn new(seed: u64) -> Self {
        let mut rng = rng::stream(seed, &[rng::tag::INIT]);
        let scale = 1.0 / (INPUTS as f64).sqrt();
        let projection = normal_vec(FEATURE_DIM * INPUTS, &mut rng).into_iter().map(|v| v * scale).collect();
        Self { seed, projection }
    }

    /// The image pooled (or replicated) to 8×8, channel-major in [-1, 1].
    pub fn pooled(pixels: &RgbImage) -> Vec<f64> {
        let (w, h) = pixels.dimensions();
        let (w, h) = (w as usize, h as usize);
        if w == h && w >= GRID && w % GRID == 0 {
            let chw = rgb_to_chw(pixels);
            let block = w / GRID;
            let mut out = vec![0.0; INPUTS];
            for c in 0..3 {
                for gy in 0..GRID {
                    for gx in 0..GRID {
                        let mut acc = 0.0;
                        for y in gy * block..(gy + 1) * block {
                            for x in gx * block..(gx + 1) * block {
                                acc += chw[(c * h + y) * w + x];
                            }
                        }
                        out[(c * GRID + gy) * GRID + gx] = acc / (block * block) as f64;
                    }
                }
            }
            out
        } else if w == h && w > 0 && GRID % w == 0 {
            rgb_to_chw(&imageops::resize(pixels, GRID as u32, GRID as u32, FilterType::Nearest))
        } else {
            rgb_to_chw(&imageops::resize(pixels, GRID as u32, GRID as u32, FilterType::Triangle))
        }
    }
}

impl Default for ToyFeatureExtractor {
    fn default() -> Self {
        Self::new(Self::DEFAULT_SEED)
    }
}

impl FeatureExtractor for ToyFeatureExtractor {
    fn dim(&self) -> usize {
        FEATURE_DIM
    }

    fn name(&self) -> String {
        format!("toy-projection-8x8-{}", self.seed)
    }

    fn extract(&self, pixels: &RgbImage) -> std::result::Result<Vec<f64>, String> {
        let input = Self::pooled(pixels);
        Ok(self.projection.chunks(INPUTS).map(|row| row.iter().zip(&input).map(|(a, b)| a * b).sum()).collect())
    }
}

/// Features of one record; extractor failures are errors because every kept
/// record needs a label.
pub fn extract_cnn_features(record: &ImageRecord, extractor: &dyn FeatureExtractor) -> Result<EmbeddingPoint> {
    let vector = extractor
        .extract(&record.pixels)
        .map_err(|message| Error::Extractor { id: record.id.clone(), message })?;
    if vector.len() != extractor.dim() || vector.iter().any(|v| !v.is_finite()) {
        return Err(Error::Extractor {
            id: record.id.clone(),
            message: format!("expected {} finite values, got {}", extractor.dim(), vector.len()),
        });
    }
    Ok(EmbeddingPoint { id: record.id.clone(), vector })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ImageSource;

    /// Mean RGB replicated across all 512 outputs.
    struct MeanRgb;

    impl FeatureExtractor for MeanRgb {
        fn dim(&self) -> usize {
            FEATURE_DIM
        }
        fn name(&self) -> String {
            "mean-rgb".into()
        }
        fn extract(&self, pixels: &RgbImage) -> std::result::Result<Vec<f64>, String> {
            let n = (pixels.width() * pixels.height()) as f64;
            let mut mean = [0.0; 3];
            for p in pixels.pixels() {
                for c in 0..3 {
                    mean[c] += f64::from(p.0[c]) / n;
                }
            }
            Ok((0..FEATURE_DIM).map(|i| mean[i % 3]).collect())
        }
    }

    struct Failing;

    impl FeatureExtractor for Failing {
        fn dim(&self) -> usize {
            FEATURE_DIM
        }
        fn name(&self) -> String {
            "failing".into()
        }
        fn extract(&self, _: &RgbImage) -> std::result::Result<Vec<f64>, String> {
            Err("model not loaded".into())
        }
    }

    fn red() -> ImageRecord {
        ImageRecord::new("red", RgbImage::from_pixel(8, 8, image::Rgb([255, 0, 0])), ImageSource::Synthetic).unwrap()
    }

    #[test]
    fn stub_extractor_carries_id_and_pattern() {
        let p = extract_cnn_features(&red(), &MeanRgb).unwrap();
        assert_eq!(p.id, "red");
        assert_eq!(p.vector.len(), 512);
        assert_eq!(&p.vector[..6], &[255.0, 0.0, 0.0, 255.0, 0.0, 0.0]);
    }

    #[test]
    fn extractor_failure_is_an_error() {
        let err = extract_cnn_features(&red(), &Failing).unwrap_err();
        assert!(err.to_string().contains("red"));
    }

    #[test]
    fn toy_extractor_is_deterministic() {
        let a = ToyFeatureExtractor::new(1);
        let b = ToyFeatureExtractor::new(1);
        let img = red().pixels;
        assert_eq!(a.extract(&img).unwrap(), b.extract(&img).unwrap());
        assert_ne!(a.extract(&img).unwrap(), ToyFeatureExtractor::new(2).extract(&img).unwrap());
    }

    #[test]
    fn pooling_handles_small_and_large_images() {
        let small = RgbImage::from_pixel(4, 4, image::Rgb([255, 255, 255]));
        assert!(ToyFeatureExtractor::pooled(&small).iter().all(|&v| v == 1.0));
        let large = RgbImage::from_fn(32, 32, |x, _| if x < 16 { image::Rgb([0; 3]) } else { image::Rgb([255; 3]) });
        let pooled = ToyFeatureExtractor::pooled(&large);
        assert_eq!(pooled[0], -1.0);
        assert_eq!(pooled[7], 1.0);
    }
}
