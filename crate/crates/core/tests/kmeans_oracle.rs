//! K-means against brute force on the small committed fixtures.

use std::collections::BTreeSet;
use std::path::PathBuf;

use condgan::labels::{kmeans_cluster, kmeans_cluster_traced, sq_dist, EmbeddingPoint, KMEANS_MAX_ITER, KMEANS_TOL};
use serde::Deserialize;

#[derive(Deserialize)]
struct Fixture {
    k: usize,
    points: Vec<Vec<f64>>,
}

fn fixtures() -> Vec<(String, Fixture)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/kmeans");
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| {
            let f: Fixture = serde_json::from_slice(&std::fs::read(&p).unwrap()).unwrap();
            (p.file_stem().unwrap().to_string_lossy().into_owned(), f)
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    assert!(out.len() >= 5, "fixtures missing from {}", dir.display());
    out
}

fn points(f: &Fixture) -> Vec<EmbeddingPoint> {
    f.points.iter().enumerate().map(|(i, v)| EmbeddingPoint { id: format!("p{i}"), vector: v.clone() }).collect()
}

/// Lowest within-cluster sum of squares over every assignment of the points
/// to `k` non-empty clusters.
fn exhaustive_optimum(pts: &[Vec<f64>], k: usize) -> f64 {
    let n = pts.len();
    let dim = pts[0].len();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let used: BTreeSet<usize> = labels.iter().copied().collect();
        if used.len() == k {
            let mut cost = 0.0;
            for c in 0..k {
                let members: Vec<&Vec<f64>> = pts.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
                let mean: Vec<f64> =
                    (0..dim).map(|d| members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64).collect();
                cost += members.iter().map(|p| sq_dist(p, &mean)).sum::<f64>();
            }
            best = best.min(cost);
        }
        // next assignment in base k
        let mut i = 0;
        while i < n {
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
        if i == n {
            return best;
        }
    }
}

#[test]
fn fixtures_reach_exhaustive_optimum() {
    for (name, f) in fixtures() {
        assert!(f.points.len() <= 8 && f.k <= 3, "{name} is too large for brute force");
        let optimum = exhaustive_optimum(&f.points, f.k);
        for seed in 0..8 {
            let a = kmeans_cluster(&points(&f), f.k, seed, KMEANS_MAX_ITER, KMEANS_TOL).unwrap();
            assert!(
                (a.inertia - optimum).abs() <= 1e-9 * optimum.max(1.0),
                "{name} seed {seed}: inertia {} vs optimum {optimum}",
                a.inertia
            );
        }
    }
}

#[test]
fn inertia_never_increases() {
    for (name, f) in fixtures() {
        for seed in 0..8 {
            let (_, trace) = kmeans_cluster_traced(&points(&f), f.k, seed, KMEANS_MAX_ITER, KMEANS_TOL).unwrap();
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{name} seed {seed}: inertia rose {} → {}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn converged_centroids_are_member_means() {
    for (name, f) in fixtures() {
        let pts = points(&f);
        let a = kmeans_cluster(&pts, f.k, 3, KMEANS_MAX_ITER, KMEANS_TOL).unwrap();
        for (c, centroid) in a.centroids.iter().enumerate() {
            let members: Vec<&EmbeddingPoint> = pts.iter().filter(|p| a.labels[&p.id] == c).collect();
            assert!(!members.is_empty(), "{name}: empty cluster {c}");
            for (d, &v) in centroid.iter().enumerate() {
                let mean = members.iter().map(|p| p.vector[d]).sum::<f64>() / members.len() as f64;
                assert!((v - mean).abs() <= 1e-9, "{name}: centroid {c} dim {d}");
            }
        }
        let recomputed: f64 = pts.iter().map(|p| sq_dist(&p.vector, &a.centroids[a.labels[&p.id]])).sum();
        assert!((recomputed - a.inertia).abs() < 1e-9);
    }
}

#[test]
fn relabeling_keeps_inertia() {
    let (_, f) = fixtures().into_iter().find(|(n, _)| n == "corners_2d").unwrap();
    let pts = points(&f);
    let a = kmeans_cluster(&pts, f.k, 0, KMEANS_MAX_ITER, KMEANS_TOL).unwrap();
    let perm = [2, 0, 1];
    let centroids: Vec<Vec<f64>> = (0..3).map(|j| a.centroids[perm.iter().position(|&p| p == j).unwrap()].clone()).collect();
    let relabeled: f64 = pts.iter().map(|p| sq_dist(&p.vector, &centroids[perm[a.labels[&p.id]]])).sum();
    assert_eq!(relabeled, a.inertia);
}

#[test]
fn blob_fixture_partition_and_centroids() {
    let (_, f) = fixtures().into_iter().find(|(n, _)| n == "blobs_2d").unwrap();
    let a = kmeans_cluster(&points(&f), 2, 0, KMEANS_MAX_ITER, KMEANS_TOL).unwrap();
    assert_eq!(a.labels["p0"], a.labels["p1"]);
    assert_eq!(a.labels["p2"], a.labels["p3"]);
    assert_ne!(a.labels["p0"], a.labels["p2"]);
    let mut cs = a.centroids.clone();
    cs.sort_by(|x, y| x[0].total_cmp(&y[0]));
    assert_eq!(cs, vec![vec![0.0, 0.5], vec![10.0, 10.5]]);
    assert_eq!(a.inertia, 1.0);
}
