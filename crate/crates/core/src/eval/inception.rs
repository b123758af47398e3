//! Inception-style score over class posteriors, and the centroid head that
//! turns toy features into posteriors.

use std::collections::BTreeSet;

use crate::error::{invalid, Result};
use crate::labels::{kmeans_cluster, sq_dist, EmbeddingPoint};

const ROW_TOL: f64 = 1e-6;

/// Rows of p(y | x).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    rows: Vec<Vec<f64>>,
    k: usize,
}

impl ProbMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || k == 0 {
            return Err(invalid("probability matrix is empty"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(invalid(format!("row {i} has {} entries, expected {k}", row.len())));
            }
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(invalid(format!("row {i} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(invalid(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self { rows, k })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn classes(&self) -> usize {
        self.k
    }

    /// Column means p(y).
    pub fn marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.k];
        for row in &self.rows {
            for (acc, p) in m.iter_mut().zip(row) {
                *acc += p;
            }
        }
        let n = self.rows.len() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(&pi, _)| pi > 0.0).map(|(&pi, &qi)| pi * (pi / qi).ln()).sum()
}

/// exp(mean KL(p(y|x) ‖ p(y))).
pub fn inception_score(probs: &ProbMatrix) -> f64 {
    let marginal = probs.marginal();
    let mean_kl = probs.rows.iter().map(|r| kl(r, &marginal)).sum::<f64>() / probs.rows.len() as f64;
    mean_kl.exp()
}

/// Softmax over negative squared distances to class centroids, with the
/// temperature set to the mean squared distance of training points to their
/// own centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidClassifier {
    pub centroids: Vec<Vec<f64>>,
    pub temperature: f64,
}

impl CentroidClassifier {
    /// Fits one centroid per label in `0..k`. Labels without points are dropped.
    pub fn fit(features: &[Vec<f64>], labels: &[usize], k: usize) -> Result<Self> {
        if features.len() != labels.len() || features.is_empty() {
            return Err(invalid("classifier needs one label per feature row"));
        }
        let dim = features[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (f, &l) in features.iter().zip(labels) {
            if l >= k {
                return Err(invalid(format!("label {l} out of range for {k} classes")));
            }
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(f) {
                *s += v;
            }
        }
        let mut index = vec![usize::MAX; k];
        let mut centroids = Vec::new();
        for (c, (sum, &n)) in sums.into_iter().zip(&counts).enumerate() {
            if n > 0 {
                index[c] = centroids.len();
                centroids.push(sum.into_iter().map(|s| s / n as f64).collect::<Vec<f64>>());
            }
        }
        let spread: f64 =
            features.iter().zip(labels).map(|(f, &l)| sq_dist(f, &centroids[index[l]])).sum::<f64>() / features.len() as f64;
        Ok(Self { centroids, temperature: spread.max(1e-12) })
    }

    /// Fits on the given labels when they name at least two classes, otherwise
    /// on k-means clusters of the features.
    pub fn fit_or_cluster(features: &[Vec<f64>], labels: Option<(&[usize], usize)>, seed: u64) -> Result<Self> {
        if let Some((labels, k)) = labels {
            if labels.iter().collect::<BTreeSet<_>>().len() >= 2 {
                return Self::fit(features, labels, k);
            }
        }
        let points: Vec<EmbeddingPoint> = features
            .iter()
            .enumerate()
            .map(|(i, f)| EmbeddingPoint { id: format!("{i:08}"), vector: f.clone() })
            .collect();
        let distinct = features.iter().map(|f| f.iter().map(|v| v.to_bits()).collect::<Vec<_>>()).collect::<BTreeSet<_>>().len();
        let k = distinct.min(10);
        if k < 2 {
            return Err(invalid("features are all identical; no classes to score against"));
        }
        let assignment = kmeans_cluster(&points, k, seed, 100, 1e-9)?;
        let labels: Vec<usize> = points.iter().map(|p| assignment.labels[&p.id]).collect();
        Self::fit(features, &labels, k)
    }

    pub fn classes(&self) -> usize {
        self.centroids.len()
    }

    pub fn probs(&self, features: &[Vec<f64>]) -> Result<ProbMatrix> {
        let rows = features
            .iter()
            .map(|f| {
                let logits: Vec<f64> = self.centroids.iter().map(|c| -sq_dist(f, c) / self.temperature).collect();
                let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
                let total: f64 = exps.iter().sum();
                exps.into_iter().map(|e| e / total).collect()
            })
            .collect();
        ProbMatrix::new(rows)
    }
}
