//! FID and IS against closed forms.

use condgan::eval::{compute_feature_stats, frechet_distance, inception_score, FeatureStats, ProbMatrix};
use condgan::imaging::normal_vec;
use condgan::rng::stream;
use nalgebra::DMatrix;
use rand::Rng;

fn stats(mean: &[f64], cov: DMatrix<f64>) -> FeatureStats {
    FeatureStats::from_moments(mean.to_vec(), cov, 1000).unwrap()
}

/// Orthogonal matrix from Gram-Schmidt on seeded normal columns.
fn random_rotation(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = stream(seed, &[]);
    let m = DMatrix::from_vec(dim, dim, normal_vec(dim * dim, &mut rng));
    m.qr().q()
}

#[test]
fn commuting_covariances_match_closed_form() {
    // Σ₁ = Q diag(a) Qᵀ, Σ₂ = Q diag(b) Qᵀ share eigenvectors, so
    // FID = ‖μ₁ − μ₂‖² + Σ (√aᵢ − √bᵢ)².
    let a: [f64; 5] = [4.0, 1.0, 0.25, 9.0, 2.0];
    let b: [f64; 5] = [1.0, 1.0, 1.0, 16.0, 0.5];
    let mu1 = [0.0, 1.0, -2.0, 0.5, 3.0];
    let mu2 = [1.0, 1.0, 0.0, 0.5, 2.0];
    for seed in 0..5 {
        let q = random_rotation(5, seed);
        let s1 = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&a)) * q.transpose();
        let s2 = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&b)) * q.transpose();
        let s1 = (&s1 + s1.transpose()) * 0.5;
        let s2 = (&s2 + s2.transpose()) * 0.5;
        let expected: f64 = mu1.iter().zip(&mu2).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
            + a.iter().zip(&b).map(|(x, y)| (x.sqrt() - y.sqrt()).powi(2)).sum::<f64>();
        let fid = frechet_distance(&stats(&mu1, s1), &stats(&mu2, s2)).unwrap();
        assert!((fid - expected).abs() < 1e-4, "seed {seed}: {fid} vs {expected}");
    }
}

#[test]
fn non_commuting_two_by_two() {
    // For 2×2 M with real non-negative eigenvalues, tr √M = √(tr M + 2√det M).
    let s1 = DMatrix::<f64>::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    let s2 = DMatrix::<f64>::from_row_slice(2, 2, &[1.0, -0.3, -0.3, 3.0]);
    let m = &s1 * &s2;
    let tr_sqrt = (m.trace() + 2.0 * m.determinant().sqrt()).sqrt();
    let expected = 0.25 + 1.0 + s1.trace() + s2.trace() - 2.0 * tr_sqrt;
    let fid = frechet_distance(&stats(&[0.0, 0.0], s1.clone()), &stats(&[0.5, 1.0], s2.clone())).unwrap();
    assert!((fid - expected).abs() < 1e-10, "{fid} vs {expected}");
    let back = frechet_distance(&stats(&[0.5, 1.0], s2), &stats(&[0.0, 0.0], s1)).unwrap();
    assert!((fid - back).abs() < 1e-8);
}

#[test]
fn identical_and_mean_shifted() {
    let mut rng = stream(11, &[]);
    let rows: Vec<Vec<f64>> = (0..50).map(|_| normal_vec(6, &mut rng)).collect();
    let s = compute_feature_stats(&rows).unwrap();
    assert!(frechet_distance(&s, &s).unwrap().abs() < 1e-6);
    let v = [0.5, -1.0, 0.0, 2.0, 0.25, -0.75];
    let shifted: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(&v).map(|(a, b)| a + b).collect()).collect();
    let t = compute_feature_stats(&shifted).unwrap();
    let norm2: f64 = v.iter().map(|x| x * x).sum();
    assert!((frechet_distance(&s, &t).unwrap() - norm2).abs() < 1e-8);
}

#[test]
fn fid_shrinks_with_more_samples() {
    let draw = |n: usize, tag: u64| -> FeatureStats {
        let mut rng = stream(5, &[tag, n as u64]);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| normal_vec(5, &mut rng)).collect();
        compute_feature_stats(&rows).unwrap()
    };
    let fids: Vec<f64> = [100, 1000, 10000].iter().map(|&n| frechet_distance(&draw(n, 0), &draw(n, 1)).unwrap()).collect();
    for w in fids.windows(2) {
        assert!(w[1] <= w[0] * 1.1, "FID did not shrink: {fids:?}");
    }
    assert!(fids[2] < fids[0]);
}

#[test]
fn fid_is_symmetric_and_nonnegative() {
    let mut rng = stream(8, &[]);
    for _ in 0..10 {
        let x: Vec<Vec<f64>> = (0..20).map(|_| normal_vec(4, &mut rng)).collect();
        let y: Vec<Vec<f64>> = (0..30).map(|_| normal_vec(4, &mut rng).iter().map(|v| v * 2.0 + 1.0).collect()).collect();
        let (sx, sy) = (compute_feature_stats(&x).unwrap(), compute_feature_stats(&y).unwrap());
        let (a, b) = (frechet_distance(&sx, &sy).unwrap(), frechet_distance(&sy, &sx).unwrap());
        assert!(a >= 0.0 && (a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

fn random_probs(n: usize, k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream(seed, &[]);
    (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect()
        })
        .collect()
}

#[test]
fn inception_score_bounds_and_row_order() {
    for seed in 0..20 {
        let k = 2 + seed as usize % 5;
        let rows = random_probs(12, k, seed);
        let is = inception_score(&ProbMatrix::new(rows.clone()).unwrap());
        assert!((1.0..=k as f64).contains(&is), "IS {is} outside [1, {k}]");
        let mut rev = rows;
        rev.reverse();
        let again = inception_score(&ProbMatrix::new(rev).unwrap());
        assert!((is - again).abs() < 1e-12);
    }
}

#[test]
fn inception_score_extremes() {
    let k = 5;
    let one_hot: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    assert!((inception_score(&ProbMatrix::new(one_hot).unwrap()) - k as f64).abs() < 1e-12);
    let flat = vec![vec![0.2; 5]; 7];
    assert!((inception_score(&ProbMatrix::new(flat).unwrap()) - 1.0).abs() < 1e-12);
}
