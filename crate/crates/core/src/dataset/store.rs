use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use condgan_autograd::Tensor;
use rand::Rng;
use rayon::prelude::*;

use super::image_path;
use super::manifest::DatasetManifest;
use crate::error::{invalid, Error, Result};
use crate::imaging::{load_rgb, rgb_to_chw};
use crate::labels::ConditionedDataset;
use crate::rng;

/// A sampled training batch.
#[derive(Debug, Clone)]
pub struct Batch {
    /// `[n, 3, r, r]` in [-1, 1].
    pub images: Tensor,
    /// `[n, c]` one-hot conditions (`c = 0` when unconditional).
    pub conditions: Tensor,
    /// Class index per row (all 0 when unconditional).
    pub classes: Vec<usize>,
    /// Record ids in batch order.
    pub ids: Vec<String>,
}

/// `[n, c]` one-hot rows for the given classes. With `c = 0` the result is
/// an empty `[n, 0]` matrix and the class values are ignored.
pub fn one_hot(classes: &[usize], c: usize) -> Tensor {
    if c == 0 {
        return Tensor::zeros(&[classes.len(), 0]);
    }
    let mut data = vec![0.0; classes.len() * c];
    for (row, &k) in classes.iter().enumerate() {
        assert!(k < c, "class {k} out of range for {c} classes");
        data[row * c + k] = 1.0;
    }
    Tensor::new(&[classes.len(), c], data)
}

/// Read-only view of a prepared dataset directory. Decoded images are cached
/// per resolution on first use.
#[derive(Debug)]
pub struct DatasetStore {
    root: PathBuf,
    manifest: DatasetManifest,
    kept: Vec<String>,
    cache: BTreeMap<u32, OnceLock<Vec<Vec<f64>>>>,
}

impl DatasetStore {
    pub fn open(root: &Path) -> Result<Self> {
        Self::from_manifest(root, DatasetManifest::load(root)?)
    }

    pub fn from_manifest(root: &Path, manifest: DatasetManifest) -> Result<Self> {
        manifest.validate()?;
        let kept: Vec<String> = manifest.kept().map(|r| r.id.clone()).collect();
        let cache = manifest.resolutions.iter().map(|&r| (r, OnceLock::new())).collect();
        Ok(Self { root: root.to_path_buf(), manifest, kept, cache })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    /// Kept record ids in manifest order.
    pub fn kept_ids(&self) -> &[String] {
        &self.kept
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    /// All kept images at `resolution`, channel-major in [-1, 1].
    pub fn images(&self, resolution: u32) -> Result<&[Vec<f64>]> {
        let cell = self
            .cache
            .get(&resolution)
            .ok_or_else(|| invalid(format!("resolution {resolution} not in dataset {:?}", self.manifest.resolutions)))?;
        if let Some(v) = cell.get() {
            return Ok(v);
        }
        let loaded = self
            .kept
            .par_iter()
            .map(|id| {
                let path = image_path(&self.root, resolution, id);
                if !path.is_file() {
                    return Err(Error::MissingFile { id: id.clone(), path });
                }
                Ok(rgb_to_chw(&load_rgb(&path)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(cell.get_or_init(|| loaded))
    }

    /// Stacks the kept images at `indices` into an `[n, 3, r, r]` tensor.
    pub fn gather(&self, resolution: u32, indices: &[usize]) -> Result<Tensor> {
        let all = self.images(resolution)?;
        let r = resolution as usize;
        let mut data = Vec::with_capacity(indices.len() * 3 * r * r);
        for &i in indices {
            data.extend_from_slice(&all[i]);
        }
        Ok(Tensor::new(&[indices.len(), 3, r, r], data))
    }

    /// Uniform sampling with replacement over kept records.
    pub fn sample_indices(&self, batch_size: usize, seed: u64) -> Result<Vec<usize>> {
        if self.kept.is_empty() {
            return Err(invalid("dataset has no kept records"));
        }
        let mut rng = rng::stream(seed, &[rng::tag::REAL]);
        Ok((0..batch_size).map(|_| rng.random_range(0..self.kept.len())).collect())
    }

    /// Class index of each kept record at `indices`.
    pub fn classes_of(&self, labels: &ConditionedDataset, indices: &[usize]) -> Result<Vec<usize>> {
        indices
            .iter()
            .map(|&i| {
                let id = &self.kept[i];
                labels.labels.get(id).copied().ok_or_else(|| Error::CoverageGap { missing: vec![id.clone()] })
            })
            .collect()
    }

    /// Samples `batch_size` image/condition pairs. The result depends only on
    /// the dataset contents, labels, resolution, batch size and seed.
    pub fn load_batch(
        &self,
        labels: Option<&ConditionedDataset>,
        resolution: u32,
        batch_size: usize,
        seed: u64,
    ) -> Result<Batch> {
        if batch_size == 0 {
            return Err(invalid("batch_size must be at least 1"));
        }
        let indices = self.sample_indices(batch_size, seed)?;
        let images = self.gather(resolution, &indices)?;
        let (classes, conditions) = match labels {
            Some(l) => {
                let classes = self.classes_of(l, &indices)?;
                let y = one_hot(&classes, l.k);
                (classes, y)
            }
            None => (vec![0; batch_size], Tensor::zeros(&[batch_size, 0])),
        };
        let ids = indices.iter().map(|&i| self.kept[i].clone()).collect();
        Ok(Batch { images, conditions, classes, ids })
    }
}
