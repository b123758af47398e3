//! Gaussian moment statistics and the Fréchet distance.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Result};

/// Sample mean and unbiased covariance of a feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub count: usize,
}

impl FeatureStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Statistics given directly as parameters (no sampling).
    pub fn from_moments(mean: Vec<f64>, cov: DMatrix<f64>, count: usize) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(invalid(format!("covariance {}×{} for a {}-dim mean", cov.nrows(), cov.ncols(), mean.len())));
        }
        Ok(Self { mean: DVector::from_vec(mean), cov, count })
    }
}

pub fn compute_feature_stats(features: &[Vec<f64>]) -> Result<FeatureStats> {
    let n = features.len();
    if n < 2 {
        return Err(invalid(format!("need at least 2 feature rows, got {n}")));
    }
    let f = features[0].len();
    if let Some(bad) = features.iter().position(|r| r.len() != f) {
        return Err(invalid(format!("feature row {bad} has {} values, expected {f}", features[bad].len())));
    }
    let mut mean = vec![0.0; f];
    for row in features {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, f, |i, j| features[i][j] - mean[j]);
    let mut cov = centered.tr_mul(&centered) / (n - 1) as f64;
    // exact symmetry regardless of gemm blocking
    for i in 0..f {
        for j in 0..i {
            let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(FeatureStats { mean: DVector::from_vec(mean), cov, count: n })
}

const SYMMETRY_TOL: f64 = 1e-8;
const EIGEN_FLOOR: f64 = 1e-10;

/// Square root of a symmetric positive semi-definite matrix by
/// eigendecomposition. Negative eigenvalues down to `−1e-10 · λ_max` are
/// rounding residue and become 0; anything more negative is an error.
pub fn matrix_sqrt_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(invalid(format!("matrix is {}×{}, not square", m.nrows(), m.ncols())));
    }
    let scale = m.amax().max(1.0);
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(invalid(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    let eig = SymmetricEigen::new(m.clone());
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    if let Some(l) = eig.eigenvalues.iter().find(|&&l| l < -EIGEN_FLOOR * top) {
        return Err(invalid(format!("matrix is not positive semi-definite (eigenvalue {l:e})")));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    let s = v * DMatrix::from_diagonal(&roots) * v.transpose();
    Ok((&s + s.transpose()) * 0.5)
}

/// ‖μ_x − μ_g‖² + Tr(Σ_x + Σ_g − 2 (Σ_x^½ Σ_g Σ_x^½)^½), clamped at 0.
pub fn frechet_distance(x: &FeatureStats, g: &FeatureStats) -> Result<f64> {
    if x.dim() != g.dim() {
        return Err(invalid(format!("feature dims differ: {} vs {}", x.dim(), g.dim())));
    }
    let diff = (&x.mean - &g.mean).norm_squared();
    let sx = matrix_sqrt_psd(&x.cov)?;
    let inner = &sx * &g.cov * &sx;
    let inner = (&inner + inner.transpose()) * 0.5;
    let cross = matrix_sqrt_psd(&inner)?.trace();
    Ok((diff + x.cov.trace() + g.cov.trace() - 2.0 * cross).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::normal_vec;
    use crate::rng::stream;

    fn assert_close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) {
        assert!((a - b).amax() < tol, "{a} vs {b}");
    }

    #[test]
    fn stats_hand_computed() {
        let s = compute_feature_stats(&[vec![0.0, 0.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(s.mean.as_slice(), &[1.0, 1.0]);
        assert_close(&s.cov, &DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 2.0, 2.0]), 1e-12);
    }

    #[test]
    fn stats_constant_and_permuted() {
        let rows = vec![vec![3.0, -1.0, 2.0]; 5];
        assert_eq!(compute_feature_stats(&rows).unwrap().cov.amax(), 0.0);
        let mut rng = stream(1, &[]);
        let rows: Vec<Vec<f64>> = (0..7).map(|_| normal_vec(3, &mut rng)).collect();
        let mut rev = rows.clone();
        rev.reverse();
        let (a, b) = (compute_feature_stats(&rows).unwrap(), compute_feature_stats(&rev).unwrap());
        assert!((&a.mean - &b.mean).amax() < 1e-12);
        assert_close(&a.cov, &b.cov, 1e-12);
        assert!(compute_feature_stats(&rows[..1]).is_err());
    }

    #[test]
    fn sqrt_cases() {
        let i = DMatrix::<f64>::identity(3, 3);
        assert_close(&matrix_sqrt_psd(&i).unwrap(), &i, 1e-12);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
        assert_close(&matrix_sqrt_psd(&d).unwrap(), &DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0])), 1e-12);
        let mut rng = stream(2, &[]);
        let a = DMatrix::from_vec(3, 3, normal_vec(9, &mut rng));
        let m = a.transpose() * &a;
        let s = matrix_sqrt_psd(&m).unwrap();
        assert!((&s * &s - &m).amax() < 1e-8);
        assert!(matrix_sqrt_psd(&DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0])).is_err());
    }

    #[test]
    fn sqrt_clamps_tiny_negative_eigenvalues() {
        // rank-1 with rounding noise
        let v = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let mut m = &v * v.transpose();
        m[(0, 0)] -= 1e-14;
        let s = matrix_sqrt_psd(&m).unwrap();
        assert!(s.iter().all(|x| x.is_finite()));
        assert!((&s * &s - &m).amax() < 1e-6);
    }

    #[test]
    fn frechet_basic_cases() {
        let mut rng = stream(3, &[]);
        let rows: Vec<Vec<f64>> = (0..20).map(|_| normal_vec(4, &mut rng)).collect();
        let s = compute_feature_stats(&rows).unwrap();
        assert!(frechet_distance(&s, &s).unwrap() < 1e-6);
        let shifted = FeatureStats { mean: &s.mean + DVector::from_vec(vec![1.0, -2.0, 0.5, 0.0]), ..s.clone() };
        assert!((frechet_distance(&s, &shifted).unwrap() - 5.25).abs() < 1e-8);
        let other = compute_feature_stats(&rows.iter().map(|r| r.iter().map(|v| v * 2.0).collect()).collect::<Vec<_>>()).unwrap();
        let (ab, ba) = (frechet_distance(&s, &other).unwrap(), frechet_distance(&other, &s).unwrap());
        assert!((ab - ba).abs() < 1e-8);
        assert!(frechet_distance(&s, &compute_feature_stats(&[vec![0.0], vec![1.0]]).unwrap()).is_err());
    }

    #[test]
    fn ill_conditioned_identical_stats_are_zero() {
        // spectrum spanning twelve decades, as with low-rank image features
        let mut rng = stream(4, &[]);
        let q = DMatrix::from_vec(6, 6, normal_vec(36, &mut rng)).qr().q();
        let d = DVector::from_vec(vec![100.0, 1.0, 1e-3, 1e-6, 1e-8, 1e-10]);
        let cov = &q * DMatrix::from_diagonal(&d) * q.transpose();
        let s = FeatureStats::from_moments(vec![0.0; 6], (&cov + cov.transpose()) * 0.5, 10).unwrap();
        assert!(frechet_distance(&s, &s).unwrap() < 1e-6);
    }

    #[test]
    fn sqrt_rejects_clearly_negative_spectrum() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.01]));
        assert!(matrix_sqrt_psd(&m).is_err());
    }
}
