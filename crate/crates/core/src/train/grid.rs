//! Sample grids: one row per condition.

use std::path::Path;

use image::RgbImage;

use crate::error::{invalid, Result};
use crate::eval::TruncationState;
use crate::imaging::{normal_tensor, save_png, tensor_to_images, tile};
use crate::model::{LatentGenerator, NoiseSource};
use crate::rng::{derive_seed, stream, tag};

/// Renders `classes.len() × samples_per_class` samples (a single row for
/// unconditional generators). Noise planes are shared across the grid, so at
/// ψ = 0 every image in a row is the same.
pub fn render_grid(
    gen: &dyn LatentGenerator,
    truncation: &TruncationState,
    classes: &[usize],
    samples_per_class: usize,
    psi: f64,
    seed: u64,
) -> Result<RgbImage> {
    let c = gen.num_classes();
    let rows: Vec<usize> = if c == 0 { vec![0] } else { classes.to_vec() };
    if rows.is_empty() || samples_per_class == 0 {
        return Err(invalid("grid needs at least one class and one sample"));
    }
    if let Some(&bad) = rows.iter().find(|&&k| c > 0 && k >= c) {
        return Err(invalid(format!("class {bad} out of range for {c} classes")));
    }
    let n = rows.len() * samples_per_class;
    let labels: Vec<usize> = rows.iter().flat_map(|&k| std::iter::repeat_n(k, samples_per_class)).collect();
    let z = normal_tensor(&[n, gen.latent_dim()], &mut stream(seed, &[tag::GRID, 0]));
    let w = truncation.apply(&gen.map(&z, &labels)?, &labels, psi)?;
    let images = gen.synthesize(&w, NoiseSource::Shared(derive_seed(seed, &[tag::GRID, 1])))?;
    Ok(tile(&tensor_to_images(&images), rows.len(), samples_per_class))
}

pub fn snapshot_grid(
    gen: &dyn LatentGenerator,
    truncation: &TruncationState,
    classes: &[usize],
    samples_per_class: usize,
    psi: f64,
    seed: u64,
    path: &Path,
) -> Result<()> {
    let grid = render_grid(gen, truncation, classes, samples_per_class, psi, seed)?;
    save_png(&grid, path)
}

/// `step<N>_psi<P>.png`
pub fn grid_file_name(step: u64, psi: f64) -> String {
    format!("step{step}_psi{psi}.png")
}
