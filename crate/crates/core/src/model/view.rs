use condgan_autograd::{no_grad, Bound, Tensor};

use super::config::resolution_of;
use super::generator::NoiseSource;
use super::ModelPair;
use crate::dataset::one_hot;
use crate::error::{invalid, Result};

/// The sampling surface evaluation needs from a generator.
pub trait LatentGenerator {
    /// 0 for unconditional models.
    fn num_classes(&self) -> usize;
    fn latent_dim(&self) -> usize;
    fn resolution(&self) -> usize;
    /// W `[n, d]` for Z `[n, d]` and one class per row.
    fn map(&self, z: &Tensor, classes: &[usize]) -> Result<Tensor>;
    /// Images `[n, 3, r, r]` in [-1, 1].
    fn synthesize(&self, w: &Tensor, noise: NoiseSource) -> Result<Tensor>;
}

/// A [`ModelPair`] generator frozen at one phase and alpha.
pub struct GeneratorView<'a> {
    model: &'a ModelPair,
    params: Bound,
    phase: usize,
    alpha: f64,
}

impl<'a> GeneratorView<'a> {
    pub fn new(model: &'a ModelPair, phase: usize, alpha: f64) -> Result<Self> {
        if phase > model.max_phase() {
            return Err(invalid(format!("phase {phase} beyond the last phase {}", model.max_phase())));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(invalid(format!("alpha {alpha} outside [0, 1]")));
        }
        Ok(Self { model, params: model.g_params.bind(false), phase, alpha })
    }
}

/// Clamps every value into [-1, 1]. The result carries no graph.
pub fn clamp_unit(x: &Tensor) -> Tensor {
    Tensor::new(x.shape(), x.data().iter().map(|v| v.clamp(-1.0, 1.0)).collect())
}

impl LatentGenerator for GeneratorView<'_> {
    fn num_classes(&self) -> usize {
        self.model.config.classes
    }

    fn latent_dim(&self) -> usize {
        self.model.config.latent_dim
    }

    fn resolution(&self) -> usize {
        resolution_of(self.phase)
    }

    fn map(&self, z: &Tensor, classes: &[usize]) -> Result<Tensor> {
        let c = self.num_classes();
        if let Some(&bad) = classes.iter().find(|&&k| c > 0 && k >= c) {
            return Err(invalid(format!("class {bad} out of range for {c} classes")));
        }
        no_grad(|| Ok(self.model.latents(&self.params, z, &one_hot(classes, c))?.w))
    }

    fn synthesize(&self, w: &Tensor, noise: NoiseSource) -> Result<Tensor> {
        no_grad(|| {
            let raw = self.model.generator.synthesize(&self.params, w, noise, self.phase, self.alpha)?;
            Ok(clamp_unit(&raw))
        })
    }
}
