use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use condgan_autograd::Tensor;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frechet::{compute_feature_stats, frechet_distance};
use super::inception::{inception_score, CentroidClassifier};
use super::truncation::TruncationState;
use crate::dataset::DatasetStore;
use crate::error::{invalid, Error, Result};
use crate::imaging::{normal_tensor, tensor_to_images};
use crate::labels::{ConditionedDataset, FeatureExtractor};
use crate::model::{LatentGenerator, NoiseSource};
use crate::rng::{derive_seed, stream, tag};
use crate::train::snapshot_grid;

pub const EVAL_REPORT_FILE: &str = "eval_report.json";
const CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub fid: f64,
    #[serde(rename = "is")]
    pub is_score: f64,
    /// Classes the IS head scores against.
    pub is_classes: usize,
    /// Mean pairwise pixel L2 distance among generated samples of each class.
    pub per_class_diversity: BTreeMap<usize, f64>,
    pub n_samples: usize,
    pub seed: u64,
    pub featurizer: String,
    pub checkpoint: Option<String>,
    pub resolution: usize,
    pub classes: usize,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::json("eval report", e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub n_samples: usize,
    pub seed: u64,
    /// Recorded in the report.
    pub checkpoint: Option<String>,
}

/// Dataset rows used as the real sample: a seeded subset without
/// replacement, or with replacement when more rows are asked for than exist.
pub fn eval_indices(len: usize, n: usize, seed: u64) -> Vec<usize> {
    let mut rng = stream(seed, &[tag::EVAL, 0]);
    if n <= len {
        let mut idx: Vec<usize> = (0..len).collect();
        idx.shuffle(&mut rng);
        idx.truncate(n);
        idx
    } else {
        log::warn!("{n} evaluation samples from {len} images: sampling with replacement");
        (0..n).map(|_| rng.random_range(0..len)).collect()
    }
}

fn features_of(images: &Tensor, featurizer: &dyn FeatureExtractor, what: &str) -> Result<Vec<Vec<f64>>> {
    tensor_to_images(images)
        .par_iter()
        .enumerate()
        .map(|(i, img)| featurizer.extract(img).map_err(|message| Error::Extractor { id: format!("{what} #{i}"), message }))
        .collect()
}

/// Mean pairwise L2 distance between images of the same class, for every
/// class with at least two samples.
pub fn per_class_diversity(images: &Tensor, classes: &[usize]) -> BTreeMap<usize, f64> {
    let per = images.numel() / images.dim(0).max(1);
    let rows: Vec<&[f64]> = images.data().chunks(per).collect();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &k) in classes.iter().enumerate() {
        groups.entry(k).or_default().push(i);
    }
    groups
        .into_iter()
        .filter(|(_, members)| members.len() >= 2)
        .map(|(k, members)| {
            let mut total = 0.0;
            let mut pairs = 0usize;
            for (a, &i) in members.iter().enumerate() {
                for &j in &members[a + 1..] {
                    total += rows[i].iter().zip(rows[j]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
                    pairs += 1;
                }
            }
            (k, total / pairs as f64)
        })
        .collect()
}

/// FID and IS of `gen` against the dataset, plus per-class diversity.
/// Generated samples reuse the classes of the sampled real images, so the
/// condition distribution follows the dataset.
pub fn evaluate_model(
    gen: &dyn LatentGenerator,
    store: &DatasetStore,
    labels: Option<&ConditionedDataset>,
    featurizer: &dyn FeatureExtractor,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let n = opts.n_samples;
    if n < 2 {
        return Err(invalid(format!("need at least 2 evaluation samples, got {n}")));
    }
    if store.is_empty() {
        return Err(invalid("dataset has no kept images"));
    }
    let c = gen.num_classes();
    if c > 0 {
        match labels {
            Some(l) if l.k == c => {}
            Some(l) => return Err(invalid(format!("generator has {c} classes, labels have {}", l.k))),
            None => return Err(invalid("conditional generator needs dataset labels")),
        }
    }
    let res = gen.resolution();
    let indices = eval_indices(store.len(), n, opts.seed);
    let real = store.gather(res as u32, &indices)?;
    let real_classes = match labels {
        Some(l) => Some(store.classes_of(l, &indices)?),
        None => None,
    };
    let fake_classes = match (&real_classes, c) {
        (Some(k), c) if c > 0 => k.clone(),
        _ => vec![0; n],
    };

    let mut chunks = Vec::new();
    for (i, labels) in fake_classes.chunks(CHUNK).enumerate() {
        let z = normal_tensor(&[labels.len(), gen.latent_dim()], &mut stream(opts.seed, &[tag::EVAL, 1, i as u64]));
        let w = gen.map(&z, labels)?;
        chunks.push(gen.synthesize(&w, NoiseSource::PerSample(derive_seed(opts.seed, &[tag::EVAL, 2, i as u64])))?);
    }
    let fake = Tensor::concat(&chunks, 0);

    let real_features = features_of(&real, featurizer, "real")?;
    let fake_features = features_of(&fake, featurizer, "generated")?;
    let fid = frechet_distance(&compute_feature_stats(&real_features)?, &compute_feature_stats(&fake_features)?)?;

    let head_labels = match (&real_classes, labels) {
        (Some(k), Some(l)) => Some((k.as_slice(), l.k)),
        _ => None,
    };
    let head = CentroidClassifier::fit_or_cluster(&real_features, head_labels, opts.seed)?;
    let is_score = inception_score(&head.probs(&fake_features)?);

    Ok(EvalReport {
        fid,
        is_score,
        is_classes: head.classes(),
        per_class_diversity: per_class_diversity(&fake, &fake_classes),
        n_samples: n,
        seed: opts.seed,
        featurizer: featurizer.name(),
        checkpoint: opts.checkpoint.clone(),
        resolution: res,
        classes: c,
    })
}

/// One grid per ψ, written as `sweep_psi<P>.png` under `out_dir`.
pub fn truncation_sweep(
    gen: &dyn LatentGenerator,
    truncation: &TruncationState,
    psis: &[f64],
    classes: &[usize],
    samples: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if psis.is_empty() {
        return Err(invalid("truncation sweep needs at least one ψ"));
    }
    psis.iter()
        .map(|&psi| {
            let path = out_dir.join(format!("sweep_psi{psi}.png"));
            snapshot_grid(gen, truncation, classes, samples, psi, seed, &path)?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_without_then_with_replacement() {
        let a = eval_indices(10, 10, 3);
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
        assert_eq!(a, eval_indices(10, 10, 3));
        let b = eval_indices(3, 8, 3);
        assert_eq!(b.len(), 8);
        assert!(b.iter().all(|&i| i < 3));
    }

    #[test]
    fn diversity_hand_computed() {
        let images = Tensor::new(&[3, 1, 1, 2], vec![0.0, 0.0, 3.0, 4.0, 1.0, 1.0]);
        let d = per_class_diversity(&images, &[0, 0, 1]);
        assert_eq!(d.len(), 1);
        assert_eq!(d[&0], 5.0);
    }

    #[test]
    fn report_round_trips() {
        let r = EvalReport {
            fid: 12.345678901234567,
            is_score: 1.5,
            is_classes: 2,
            per_class_diversity: BTreeMap::from([(0, 0.1), (1, 1.0 / 3.0)]),
            n_samples: 64,
            seed: 9,
            featurizer: "toy".into(),
            checkpoint: Some("run/checkpoints/step10".into()),
            resolution: 16,
            classes: 2,
        };
        assert_eq!(EvalReport::from_json(&r.to_json()).unwrap(), r);
    }
}
