use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{sq_dist, ClusterAssignment, EmbeddingPoint};
use crate::error::{invalid, Result};

/// Distribution of nearest-centroid margins inside one cluster. The margin of
/// a point is the distance to the closest other centroid minus the distance
/// to its own centroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub k: usize,
    pub sizes: Vec<usize>,
    pub inertia_share: Vec<f64>,
    /// `None` for K = 1 or an empty cluster.
    pub margins: Vec<Option<MarginStats>>,
}

pub fn cluster_report(points: &[EmbeddingPoint], assignment: &ClusterAssignment) -> Result<ClusterReport> {
    let k = assignment.k;
    let mut sizes = vec![0usize; k];
    let mut sse = vec![0.0; k];
    let mut margins: Vec<Vec<f64>> = vec![Vec::new(); k];
    for p in points {
        let &c = assignment.labels.get(&p.id).ok_or_else(|| invalid(format!("point {} has no label", p.id)))?;
        let own = assignment.centroids.get(c).ok_or_else(|| invalid(format!("label {c} has no centroid")))?;
        if own.len() != p.vector.len() {
            return Err(invalid(format!("point {} dimension mismatch", p.id)));
        }
        sizes[c] += 1;
        let d_own = sq_dist(&p.vector, own);
        sse[c] += d_own;
        let other = assignment
            .centroids
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != c)
            .map(|(_, cen)| sq_dist(&p.vector, cen).sqrt())
            .fold(f64::INFINITY, f64::min);
        if other.is_finite() {
            margins[c].push(other - d_own.sqrt());
        }
    }
    let total: f64 = sse.iter().sum();
    let n = points.len().max(1) as f64;
    let inertia_share = if total > 0.0 {
        sse.iter().map(|s| s / total).collect()
    } else {
        sizes.iter().map(|&s| s as f64 / n).collect()
    };
    let margins = margins
        .into_iter()
        .map(|m| {
            (!m.is_empty()).then(|| MarginStats {
                min: m.iter().copied().fold(f64::INFINITY, f64::min),
                mean: m.iter().sum::<f64>() / m.len() as f64,
                max: m.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            })
        })
        .collect();
    Ok(ClusterReport { k, sizes, inertia_share, margins })
}

impl ClusterReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "cluster  size  inertia_share  margin_min  margin_mean  margin_max").unwrap();
        for j in 0..self.k {
            let m = match &self.margins[j] {
                Some(m) => format!("{:>10.4}  {:>11.4}  {:>10.4}", m.min, m.mean, m.max),
                None => format!("{:>10}  {:>11}  {:>10}", "-", "-", "-"),
            };
            writeln!(s, "{j:>7}  {:>4}  {:>13.4}  {m}", self.sizes[j], self.inertia_share[j]).unwrap();
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::kmeans_cluster;

    fn blobs() -> Vec<EmbeddingPoint> {
        [(0.0, 0.0), (0.0, 1.0), (10.0, 10.0), (10.0, 11.0)]
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| EmbeddingPoint { id: format!("b{i}"), vector: vec![x, y] })
            .collect()
    }

    #[test]
    fn balanced_blobs() {
        let pts = blobs();
        let a = kmeans_cluster(&pts, 2, 3, 100, 0.0).unwrap();
        let r = cluster_report(&pts, &a).unwrap();
        assert_eq!(r.sizes, vec![2, 2]);
        assert_eq!(r.inertia_share, vec![0.5, 0.5]);
    }

    #[test]
    fn single_cluster_share() {
        let pts = blobs();
        let a = kmeans_cluster(&pts, 1, 3, 100, 0.0).unwrap();
        let r = cluster_report(&pts, &a).unwrap();
        assert_eq!(r.inertia_share, vec![1.0]);
        assert_eq!(r.margins, vec![None]);
    }

    #[test]
    fn blob_margins_by_hand() {
        let pts = blobs();
        let a = kmeans_cluster(&pts, 2, 3, 100, 0.0).unwrap();
        let r = cluster_report(&pts, &a).unwrap();
        // (0,0): own 0.5, other |(10,10.5)| = 14.5 → 14.0
        // (0,1): own 0.5, other √(100 + 90.25) → √190.25 − 0.5
        let near = 190.25f64.sqrt() - 0.5;
        let m = r.margins[a.labels["b0"]].as_ref().unwrap();
        assert!((m.max - 14.0).abs() < 1e-12);
        assert!((m.min - near).abs() < 1e-12);
        assert!((m.mean - (14.0 + near) / 2.0).abs() < 1e-12);
        // symmetric for the other blob
        let m2 = r.margins[a.labels["b2"]].as_ref().unwrap();
        assert!((m2.max - 14.0).abs() < 1e-12 && (m2.min - near).abs() < 1e-12);
        assert!(r.to_text().lines().count() == 3);
    }
}
