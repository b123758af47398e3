//! Dataset directory → `labels.csv` + `clusters.json`.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use super::{
    assign_conditions, cluster_report, extract_cnn_features, kmeans_cluster, word_points, ClusterAssignment,
    ClusterReport, ConditionedDataset, EmbeddingPoint, FeatureExtractor, LabelMethod, WordEmbedder,
};
use crate::dataset::{image_path, DatasetManifest, ImageRecord};
use crate::error::{invalid, Error, Result};
use crate::imaging::load_rgb;

pub const KMEANS_MAX_ITER: usize = 300;
pub const KMEANS_TOL: f64 = 1e-9;

/// How each kept record is projected before clustering.
pub enum EmbeddingSource<'a> {
    /// Midpoint of each record's object words.
    Words { labels: &'a BTreeMap<String, Vec<String>>, embedder: &'a dyn WordEmbedder },
    /// Features of the max-resolution image.
    Features(&'a dyn FeatureExtractor),
    /// Precomputed vectors keyed like the other fixtures (id, path or stem).
    Precomputed(&'a BTreeMap<String, Vec<f64>>),
}

impl EmbeddingSource<'_> {
    pub fn method(&self) -> LabelMethod {
        match self {
            EmbeddingSource::Words { .. } => LabelMethod::WordMidpoint,
            EmbeddingSource::Features(_) | EmbeddingSource::Precomputed(_) => LabelMethod::CnnEmbedding,
        }
    }
}

/// Features of every kept record, read from the largest pyramid level.
pub fn dataset_features(manifest: &DatasetManifest, root: &Path, extractor: &dyn FeatureExtractor) -> Result<Vec<EmbeddingPoint>> {
    let kept: Vec<_> = manifest.kept().collect();
    kept.par_iter()
        .map(|entry| {
            let path = image_path(root, manifest.max_resolution, &entry.id);
            if !path.is_file() {
                return Err(Error::MissingFile { id: entry.id.clone(), path });
            }
            let record = ImageRecord::new(entry.id.clone(), load_rgb(&path)?, entry.source)?;
            extract_cnn_features(&record, extractor)
        })
        .collect()
}

fn precomputed_points(manifest: &DatasetManifest, vectors: &BTreeMap<String, Vec<f64>>) -> Result<Vec<EmbeddingPoint>> {
    let mut by_id = BTreeMap::new();
    for (key, v) in vectors {
        if let Some(id) = manifest.resolve_key(key) {
            by_id.insert(id, v);
        }
    }
    let mut missing = Vec::new();
    let mut points = Vec::new();
    for rec in manifest.kept() {
        match by_id.get(rec.id.as_str()) {
            Some(v) => points.push(EmbeddingPoint { id: rec.id.clone(), vector: v.to_vec() }),
            None => missing.push(rec.id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::CoverageGap { missing });
    }
    Ok(points)
}

pub fn embed_dataset(manifest: &DatasetManifest, root: &Path, source: &EmbeddingSource<'_>) -> Result<Vec<EmbeddingPoint>> {
    if manifest.kept_count() == 0 {
        return Err(invalid("dataset has no kept records"));
    }
    match source {
        EmbeddingSource::Words { labels, embedder } => word_points(manifest, labels, *embedder),
        EmbeddingSource::Features(x) => dataset_features(manifest, root, *x),
        EmbeddingSource::Precomputed(v) => precomputed_points(manifest, v),
    }
}

#[derive(Debug, Clone)]
pub struct LabelOutcome {
    pub dataset: ConditionedDataset,
    pub assignment: ClusterAssignment,
    pub report: ClusterReport,
}

/// Embeds and clusters the kept records of the dataset at `root`, then
/// writes `labels.csv` and `clusters.json` next to its manifest.
pub fn label_dataset(root: &Path, source: &EmbeddingSource<'_>, k: usize, seed: u64) -> Result<LabelOutcome> {
    let manifest = DatasetManifest::load(root)?;
    let points = embed_dataset(&manifest, root, source)?;
    let assignment = kmeans_cluster(&points, k, seed, KMEANS_MAX_ITER, KMEANS_TOL)?;
    let dataset = assign_conditions(&manifest, &assignment, source.method())?;
    let report = cluster_report(&points, &assignment)?;
    dataset.save(root, Some(&assignment))?;
    Ok(LabelOutcome { dataset, assignment, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_shapes, prepare_dataset, IngestOptions, PrepareOptions, ShapeClass, TextFilter};
    use crate::labels::{TableEmbedder, ToyFeatureExtractor};

    fn shapes_dataset(dir: &Path) -> std::path::PathBuf {
        let src = dir.join("src");
        generate_shapes(&src, &[ShapeClass::red_circle(), ShapeClass::blue_square()], 6, 16, 3).unwrap();
        let ds = dir.join("ds");
        let opts = PrepareOptions { ingest: IngestOptions::new(16, 0), filter: TextFilter::Off, min_chars: 2, force: false };
        prepare_dataset(&src, &ds, &opts).unwrap();
        ds
    }

    #[test]
    fn features_separate_colors() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = shapes_dataset(tmp.path());
        let x = ToyFeatureExtractor::default();
        let out = label_dataset(&ds, &EmbeddingSource::Features(&x), 2, 0).unwrap();
        let manifest = DatasetManifest::load(&ds).unwrap();
        let mut pairs = BTreeMap::new();
        for r in manifest.kept() {
            let red = r.path.starts_with("red");
            pairs.insert((red, out.dataset.labels[&r.id]), ());
        }
        assert_eq!(pairs.len(), 2, "each color maps to one cluster");
        assert_eq!(out.report.sizes, vec![6, 6]);
        assert_eq!(ConditionedDataset::load(&ds).unwrap(), out.dataset);
    }

    #[test]
    fn words_path_covers_every_record() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = shapes_dataset(tmp.path());
        let manifest = DatasetManifest::load(&ds).unwrap();
        let labels: BTreeMap<String, Vec<String>> = manifest
            .records
            .iter()
            .map(|r| {
                let stem = r.path.trim_end_matches(".png").to_string();
                let words = if stem.starts_with("red") { vec!["sun".into(), "circle".into()] } else { vec!["box".into(), "sea".into()] };
                (stem, words)
            })
            .collect();
        let table = TableEmbedder::parse("sun\t1 0\ncircle\t1 0.2\nbox\t0 1\nsea\t0.1 1\n").unwrap();
        let out = label_dataset(&ds, &EmbeddingSource::Words { labels: &labels, embedder: &table }, 2, 1).unwrap();
        assert_eq!(out.dataset.labels.len(), manifest.kept_count());
        assert_eq!(out.dataset.method, LabelMethod::WordMidpoint);
    }

    #[test]
    fn too_large_k_suggests_smaller() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = shapes_dataset(tmp.path());
        let x = ToyFeatureExtractor::default();
        let err = label_dataset(&ds, &EmbeddingSource::Features(&x), 13, 0).unwrap_err();
        assert!(err.to_string().contains("smaller K"), "{err}");
    }
}
