//! Center of mass in W and the truncation trick.

use condgan_autograd::Tensor;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::dataset::one_hot;
use crate::error::{invalid, Result};
use crate::imaging::normal_tensor;
use crate::model::{build_conditional_latent, ClassEmbedding, LatentGenerator, MappingNetwork};
use crate::rng::{stream, tag};

const CHUNK: usize = 1024;

/// (1 − ψ)·w̄ + ψ·w, exact at ψ = 0 and ψ = 1.
pub fn truncate_latent(w: &[f64], center: &[f64], psi: f64) -> Vec<f64> {
    assert_eq!(w.len(), center.len(), "latent and center widths differ");
    w.iter().zip(center).map(|(&wi, &ci)| (1.0 - psi) * ci + psi * wi).collect()
}

/// How the class of each center-of-mass draw is chosen.
#[derive(Debug, Clone, Copy)]
pub enum ClassDraw<'a> {
    /// Every draw uses this class.
    Fixed(usize),
    /// Classes drawn from these (unnormalized) weights.
    Weighted(&'a [f64]),
}

/// Mean of W over `num_samples` seeded draws of (z, y), accumulated chunk
/// by chunk in a fixed order.
fn center_with(
    d: usize,
    classes: usize,
    draw: ClassDraw<'_>,
    num_samples: usize,
    seed: u64,
    map: &dyn Fn(&Tensor, &[usize]) -> Result<Tensor>,
) -> Result<Vec<f64>> {
    if num_samples == 0 {
        return Err(invalid("center of mass needs at least one sample"));
    }
    let sampler = match draw {
        ClassDraw::Weighted(weights) if classes > 0 => {
            if weights.len() != classes {
                return Err(invalid(format!("{} class weights for {classes} classes", weights.len())));
            }
            Some(WeightedIndex::new(weights).map_err(|e| invalid(format!("class weights: {e}")))?)
        }
        ClassDraw::Fixed(k) if classes > 0 && k >= classes => {
            return Err(invalid(format!("class {k} out of range for {classes} classes")));
        }
        _ => None,
    };
    let mut sum = vec![0.0; d];
    let mut done = 0;
    let mut chunk = 0u64;
    while done < num_samples {
        let n = CHUNK.min(num_samples - done);
        let z = normal_tensor(&[n, d], &mut stream(seed, &[tag::CENTER, chunk, 0]));
        let labels: Vec<usize> = match (&sampler, draw) {
            (Some(s), _) => {
                let mut rng = stream(seed, &[tag::CENTER, chunk, 1]);
                (0..n).map(|_| s.sample(&mut rng)).collect()
            }
            (None, ClassDraw::Fixed(k)) if classes > 0 => vec![k; n],
            _ => vec![0; n],
        };
        let w = map(&z, &labels)?;
        for row in w.data().chunks(d) {
            for (s, v) in sum.iter_mut().zip(row) {
                *s += v;
            }
        }
        done += n;
        chunk += 1;
    }
    Ok(sum.into_iter().map(|s| s / num_samples as f64).collect())
}

/// w̄ = mean of f([y·R ⌢ z]) over seeded draws.
pub fn latent_center_of_mass(
    mapping: &dyn MappingNetwork,
    embedding: &ClassEmbedding,
    draw: ClassDraw<'_>,
    num_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let d = mapping.output_dim();
    let c = embedding.classes;
    center_with(d, c, draw, num_samples, seed, &|z, labels| {
        Ok(build_conditional_latent(z, &one_hot(labels, c), embedding, mapping)?.w)
    })
}

/// Global and per-class centers of mass for one generator.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationState {
    pub center: Vec<f64>,
    /// One center per class; empty for unconditional models.
    pub class_centers: Vec<Vec<f64>>,
    pub samples: usize,
}

impl TruncationState {
    /// Global center from `class_weights` (uniform when `None`), plus one
    /// center per class with the condition held fixed.
    pub fn compute(gen: &dyn LatentGenerator, class_weights: Option<&[f64]>, samples: usize, seed: u64) -> Result<Self> {
        let (d, c) = (gen.latent_dim(), gen.num_classes());
        let map = |z: &Tensor, labels: &[usize]| gen.map(z, labels);
        let uniform = vec![1.0; c.max(1)];
        let weights = class_weights.unwrap_or(&uniform);
        let center = center_with(d, c, ClassDraw::Weighted(weights), samples, seed, &map)?;
        let class_centers = (0..c)
            .map(|k| center_with(d, c, ClassDraw::Fixed(k), samples, seed, &map))
            .collect::<Result<_>>()?;
        Ok(Self { center, class_centers, samples })
    }

    /// The center used for class `k`: per-class when available.
    pub fn center_for(&self, k: usize) -> &[f64] {
        self.class_centers.get(k).unwrap_or(&self.center)
    }

    /// Truncates each row of `w` toward the center of its class.
    pub fn apply(&self, w: &Tensor, classes: &[usize], psi: f64) -> Result<Tensor> {
        let d = self.center.len();
        if w.rank() != 2 || w.dim(1) != d || w.dim(0) != classes.len() {
            return Err(invalid(format!("W {:?} does not match {} classes of width {d}", w.shape(), classes.len())));
        }
        let data = w
            .data()
            .chunks(d)
            .zip(classes)
            .flat_map(|(row, &k)| truncate_latent(row, self.center_for(k), psi))
            .collect();
        Ok(Tensor::new(w.shape(), data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Passes Z straight through (unconditional).
    struct Identity(usize);

    impl MappingNetwork for Identity {
        fn input_dim(&self) -> usize {
            self.0
        }
        fn output_dim(&self) -> usize {
            self.0
        }
        fn map(&self, input: &Tensor) -> Tensor {
            input.clone()
        }
    }

    #[test]
    fn truncate_cases() {
        let w = [0.3, -1.7, 2.2];
        let c = [0.1, 0.2, -0.4];
        assert_eq!(truncate_latent(&w, &c, 0.0), c.to_vec());
        assert_eq!(truncate_latent(&w, &c, 1.0), w.to_vec());
        assert_eq!(truncate_latent(&[2.0, 4.0], &[0.0, 0.0], 0.5), vec![1.0, 2.0]);
    }

    #[test]
    fn identity_center_shrinks_to_zero() {
        let d = 8;
        let none = ClassEmbedding::sample(0, 0, 0);
        let n = 10_000;
        let w = latent_center_of_mass(&Identity(d), &none, ClassDraw::Fixed(0), n, 5).unwrap();
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 3.0 * d as f64 / (n as f64).sqrt(), "{norm}");
        assert_eq!(w, latent_center_of_mass(&Identity(d), &none, ClassDraw::Fixed(0), n, 5).unwrap());
    }

    #[test]
    fn single_sample_center_is_that_sample() {
        let none = ClassEmbedding::sample(0, 0, 0);
        let w = latent_center_of_mass(&Identity(3), &none, ClassDraw::Fixed(0), 1, 9).unwrap();
        let z = normal_tensor(&[1, 3], &mut stream(9, &[tag::CENTER, 0, 0]));
        assert_eq!(w, z.to_vec());
        assert!(latent_center_of_mass(&Identity(3), &none, ClassDraw::Fixed(0), 0, 9).is_err());
    }
}
