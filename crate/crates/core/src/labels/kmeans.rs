use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EmbeddingPoint;
use crate::error::{invalid, Error, Result};
use crate::rng;

pub const DEFAULT_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub k: usize,
    pub seed: u64,
    /// `k` rows of length D.
    pub centroids: Vec<Vec<f64>>,
    pub labels: BTreeMap<String, usize>,
    /// Sum of squared distances from each point to its assigned centroid.
    pub inertia: f64,
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid (lowest index on ties) and its squared distance.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn validate(points: &[EmbeddingPoint], k: usize, max_iter: usize, tol: f64) -> Result<()> {
    if k == 0 {
        return Err(invalid("K must be at least 1"));
    }
    if max_iter == 0 {
        return Err(invalid("max_iter must be at least 1"));
    }
    if !(tol >= 0.0) {
        return Err(invalid("tol must be non-negative"));
    }
    if points.len() < k {
        return Err(invalid(format!("{} points for K = {k}; use a smaller K", points.len())));
    }
    let dim = points[0].vector.len();
    let mut ids = HashSet::new();
    for p in points {
        if p.vector.len() != dim {
            return Err(invalid(format!("point {} has dimension {}, expected {dim}", p.id, p.vector.len())));
        }
        if p.vector.iter().any(|v| !v.is_finite()) {
            return Err(invalid(format!("point {} has non-finite components", p.id)));
        }
        if !ids.insert(p.id.as_str()) {
            return Err(invalid(format!("duplicate point id {}", p.id)));
        }
    }
    let distinct: HashSet<Vec<u64>> = points.iter().map(|p| p.vector.iter().map(|v| (v + 0.0).to_bits()).collect()).collect();
    if distinct.len() < k {
        return Err(Error::TooFewDistinct { k, distinct: distinct.len() });
    }
    Ok(())
}

/// Seeded k-means++ seeding: each new centroid is drawn with probability
/// proportional to its squared distance from the nearest existing one.
fn init_plus_plus(points: &[&[f64]], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        // at least k distinct points, so some point is still uncovered
        debug_assert!(total > 0.0);
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &d) in d2.iter().enumerate() {
            acc += d;
            if d > 0.0 && acc > target {
                pick = Some(i);
                break;
            }
        }
        // rounding can leave `target` just past the last increment
        let pick = pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("uncovered point"));
        let c = points[pick].to_vec();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd's algorithm from seeded k-means++ initialization.
///
/// Stops when no centroid moves by more than `tol` (Euclidean) or after
/// `max_iter` iterations. An empty cluster is reseeded with the point
/// farthest from its centroid.
pub fn kmeans_cluster(points: &[EmbeddingPoint], k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<ClusterAssignment> {
    kmeans_cluster_traced(points, k, seed, max_iter, tol).map(|(a, _)| a)
}

/// As [`kmeans_cluster`], also returning the inertia after each assignment step.
pub fn kmeans_cluster_traced(
    points: &[EmbeddingPoint],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<(ClusterAssignment, Vec<f64>)> {
    validate(points, k, max_iter, tol)?;
    let vecs: Vec<&[f64]> = points.iter().map(|p| p.vector.as_slice()).collect();
    let dim = vecs[0].len();
    let mut rng = rng::stream(seed, &[]);
    let mut centroids = init_plus_plus(&vecs, k, &mut rng);
    let mut trace = Vec::new();

    for _ in 0..max_iter {
        let mut assigned: Vec<(usize, f64)> = vecs.par_iter().map(|p| nearest(p, &centroids)).collect();
        repair_empty(&vecs, &mut centroids, &mut assigned);
        trace.push(assigned.iter().map(|a| a.1).sum());

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &(j, _)) in vecs.iter().zip(&assigned) {
            counts[j] += 1;
            for (s, v) in sums[j].iter_mut().zip(p.iter()) {
                *s += v;
            }
        }
        let mut shift: f64 = 0.0;
        for (j, sum) in sums.into_iter().enumerate() {
            let mean: Vec<f64> = sum.into_iter().map(|s| s / counts[j] as f64).collect();
            shift = shift.max(sq_dist(&mean, &centroids[j]).sqrt());
            centroids[j] = mean;
        }
        if shift <= tol {
            break;
        }
    }

    let assigned: Vec<(usize, f64)> = vecs.par_iter().map(|p| nearest(p, &centroids)).collect();
    let mut assigned = assigned;
    repair_empty(&vecs, &mut centroids, &mut assigned);
    let inertia = assigned.iter().map(|a| a.1).sum();
    let labels = points.iter().zip(&assigned).map(|(p, a)| (p.id.clone(), a.0)).collect();
    Ok((ClusterAssignment { k, seed, centroids, labels, inertia }, trace))
}

/// Moves the farthest point of a multi-member cluster into each empty
/// cluster, placing that centroid on the point.
fn repair_empty(points: &[&[f64]], centroids: &mut [Vec<f64>], assigned: &mut [(usize, f64)]) {
    loop {
        let mut counts = vec![0usize; centroids.len()];
        for a in assigned.iter() {
            counts[a.0] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else { return };
        let donor = assigned
            .iter()
            .enumerate()
            .filter(|(_, a)| counts[a.0] > 1)
            .max_by(|x, y| x.1 .1.total_cmp(&y.1 .1).then(y.0.cmp(&x.0)))
            .map(|(i, _)| i)
            .expect("at least k points");
        centroids[empty] = points[donor].to_vec();
        assigned[donor] = (empty, 0.0);
    }
}
