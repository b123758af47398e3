#![allow(dead_code)]

use std::path::Path;

use condgan::dataset::{generate_shapes, prepare_dataset, shape_labels, DatasetStore, IngestOptions, PrepareOptions, ShapeClass, TextFilter};
use condgan::labels::ConditionedDataset;
use condgan::train::ExperimentConfig;

/// Red circles and blue squares, prepared at `max_res`, labeled by shape.
pub fn shapes_dataset(dir: &Path, per_class: usize, max_res: u32) -> (DatasetStore, ConditionedDataset) {
    let src = dir.join("src");
    let images = generate_shapes(&src, &[ShapeClass::red_circle(), ShapeClass::blue_square()], per_class, 32, 1).unwrap();
    let ds = dir.join("ds");
    let opts = PrepareOptions { ingest: IngestOptions::new(max_res, 1), filter: TextFilter::Off, min_chars: 2, force: false };
    let prep = prepare_dataset(&src, &ds, &opts).unwrap();
    let labels = shape_labels(&prep.manifest, &images, 2).unwrap();
    (DatasetStore::open(&ds).unwrap(), labels)
}

/// A model small enough to train for a few hundred steps in seconds.
pub fn tiny_config(max_res: usize, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.seed = seed;
    cfg.generator.latent_dim = 16;
    cfg.generator.mapping_depth = 2;
    cfg.generator.max_resolution = max_res;
    cfg.generator.channels = [(4, 16), (8, 8), (16, 8)].into_iter().filter(|&(r, _)| r <= max_res).collect();
    cfg.train.batch_size = [(4, 8), (8, 8), (16, 8)].into_iter().filter(|&(r, _)| r <= max_res).collect();
    cfg.train.images_per_phase = 160;
    cfg.train.images_per_transition = 160;
    cfg.train.total_images = 640;
    cfg.train.log_every = 5;
    cfg.train.snapshot_every = 1000;
    cfg.train.checkpoint_every = 20;
    cfg.train.grid_samples = 4;
    cfg.train.truncation_samples = 64;
    cfg
}
