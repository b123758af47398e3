//! Synthetic logo-like images: one flat-colored shape on a plain background.
//! Used to make tests and demos self-contained.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use rand::Rng;

use super::manifest::DatasetManifest;
use crate::error::{invalid, Result};
use crate::labels::{ConditionedDataset, LabelMethod};
use crate::imaging::save_png;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    Circle,
    Square,
    Triangle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeClass {
    pub name: String,
    pub kind: ShapeKind,
    pub color: [u8; 3],
}

impl ShapeClass {
    pub fn new(name: &str, kind: ShapeKind, color: [u8; 3]) -> Self {
        Self { name: name.to_string(), kind, color }
    }

    pub fn red_circle() -> Self {
        Self::new("red_circle", ShapeKind::Circle, [255, 0, 0])
    }

    pub fn blue_square() -> Self {
        Self::new("blue_square", ShapeKind::Square, [0, 0, 255])
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticImage {
    pub path: PathBuf,
    pub class: usize,
}

/// Draws one shape, roughly centered, with seeded jitter in size and position.
pub fn draw_shape(class: &ShapeClass, resolution: u32, rng: &mut impl Rng) -> RgbImage {
    let r = resolution as f64;
    let half = r * rng.random_range(0.25..0.35);
    let cx = r / 2.0 + r * rng.random_range(-0.08..0.08);
    let cy = r / 2.0 + r * rng.random_range(-0.08..0.08);
    let color = Rgb(class.color);
    RgbImage::from_fn(resolution, resolution, |x, y| {
        let (px, py) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
        let inside = match class.kind {
            ShapeKind::Circle => px * px + py * py <= half * half,
            ShapeKind::Square => px.abs() <= half && py.abs() <= half,
            // apex up, base at +half
            ShapeKind::Triangle => py <= half && py >= -half && px.abs() <= (py + half) / 2.0,
        };
        if inside {
            color
        } else {
            Rgb([0, 0, 0])
        }
    })
}

/// Writes `per_class` PNGs per class into `dir` as `<name>_<index>.png`.
pub fn generate_shapes(
    dir: &Path,
    classes: &[ShapeClass],
    per_class: usize,
    resolution: u32,
    seed: u64,
) -> Result<Vec<SyntheticImage>> {
    let mut out = Vec::with_capacity(classes.len() * per_class);
    for (ci, class) in classes.iter().enumerate() {
        for i in 0..per_class {
            let mut rng = rng::stream(seed, &[ci as u64, i as u64]);
            let img = draw_shape(class, resolution, &mut rng);
            let path = dir.join(format!("{}_{i:04}.png", class.name));
            save_png(&img, &path)?;
            out.push(SyntheticImage { path, class: ci });
        }
    }
    Ok(out)
}

/// Labels each kept record with the class its synthetic source was drawn
/// from. Records are matched by file name.
pub fn shape_labels(manifest: &DatasetManifest, images: &[SyntheticImage], k: usize) -> Result<ConditionedDataset> {
    let by_name: BTreeMap<&str, usize> =
        images.iter().filter_map(|s| Some((s.path.file_name()?.to_str()?, s.class))).collect();
    let mut labels = BTreeMap::new();
    for r in manifest.kept() {
        let name = Path::new(&r.path).file_name().and_then(|n| n.to_str()).unwrap_or("");
        let class = by_name.get(name).ok_or_else(|| invalid(format!("record {} ({}) is not a synthetic image", r.id, r.path)))?;
        labels.insert(r.id.clone(), *class);
    }
    Ok(ConditionedDataset { k, method: LabelMethod::External, labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_use_their_color() {
        let mut rng = rng::stream(1, &[]);
        for class in [ShapeClass::red_circle(), ShapeClass::blue_square(), ShapeClass::new("g", ShapeKind::Triangle, [0, 255, 0])] {
            let img = draw_shape(&class, 16, &mut rng);
            let colored = img.pixels().filter(|p| p.0 == class.color).count();
            assert!(colored > 16, "{} has only {colored} colored pixels", class.name);
            assert!(img.pixels().all(|p| p.0 == class.color || p.0 == [0, 0, 0]));
        }
    }
}
