//! Wasserstein losses with gradient penalty.

use condgan_autograd::{grad, Bound, Tensor};
use rand::Rng;

use super::discriminator::Discriminator;
use crate::error::{invalid, Result};

/// Anything that scores `[n, 3, r, r]` images under one-hot conditions.
pub trait Critic {
    fn score(&self, images: &Tensor, y: &Tensor) -> Result<Tensor>;
}

/// A discriminator with fixed parameters, phase and alpha.
pub struct BoundCritic<'a> {
    pub discriminator: &'a Discriminator,
    pub params: &'a Bound,
    pub phase: usize,
    pub alpha: f64,
}

impl Critic for BoundCritic<'_> {
    fn score(&self, images: &Tensor, y: &Tensor) -> Result<Tensor> {
        self.discriminator.forward(self.params, images, y, self.phase, self.alpha)
    }
}

/// Scalar losses from one training step.
#[derive(Debug, Clone)]
pub struct LossTerms {
    pub d_loss: f64,
    pub g_loss: f64,
    pub gradient_penalty: f64,
    pub lambda: f64,
    /// Interpolates the penalty was evaluated at.
    pub interpolated: Tensor,
}

/// Critic objective to minimize: mean(fake) − mean(real).
pub fn wgan_d_loss(real_scores: &Tensor, fake_scores: &Tensor) -> Tensor {
    assert_eq!(real_scores.numel(), fake_scores.numel(), "score batches differ in size");
    fake_scores.mean().sub(&real_scores.mean())
}

/// Generator objective: −mean(fake).
pub fn wgan_g_loss(fake_scores: &Tensor) -> Tensor {
    assert!(fake_scores.numel() > 0, "empty score batch");
    fake_scores.mean().neg()
}

/// Penalty value (differentiable w.r.t. critic parameters), the per-sample
/// gradient norms, and the interpolates.
#[derive(Debug, Clone)]
pub struct Penalty {
    pub value: Tensor,
    pub grad_norms: Vec<f64>,
    pub interpolated: Tensor,
}

/// λ · mean((‖∇ D(x̂ | y)‖₂ − 1)²) with x̂ = ε·real + (1 − ε)·fake, one ε ~ U[0, 1)
/// per sample. The gradient is taken with respect to the image pixels only.
pub fn gradient_penalty(
    critic: &dyn Critic,
    real: &Tensor,
    fake: &Tensor,
    y: &Tensor,
    lambda: f64,
    rng: &mut impl Rng,
) -> Result<Penalty> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(invalid(format!("penalty weight must be ≥ 0, got {lambda}")));
    }
    if real.shape() != fake.shape() || real.rank() < 2 {
        return Err(invalid(format!("real {:?} and fake {:?} batches differ", real.shape(), fake.shape())));
    }
    let n = real.dim(0);
    let eps: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut eps_shape = vec![1; real.rank()];
    eps_shape[0] = n;
    let eps = Tensor::new(&eps_shape, eps);
    let one_minus = eps.neg().add_scalar(1.0);
    let mixed = real.detach().mul(&eps).add(&fake.detach().mul(&one_minus));
    penalty_at(critic, &mixed, y, lambda)
}

/// The penalty evaluated at given interpolates.
pub fn penalty_at(critic: &dyn Critic, interpolated: &Tensor, y: &Tensor, lambda: f64) -> Result<Penalty> {
    let n = interpolated.dim(0);
    if lambda == 0.0 {
        return Ok(Penalty { value: Tensor::scalar(0.0), grad_norms: Vec::new(), interpolated: interpolated.clone() });
    }
    let x_hat = interpolated.detach().requires_grad_leaf();
    let scores = critic.score(&x_hat, y)?;
    let g = grad(&scores.sum(), &[&x_hat], true).remove(0);
    let axes: Vec<usize> = (1..g.rank()).collect();
    let norms = g.square().sum_keepdim(&axes).add_scalar(1e-12).sqrt().reshape(&[n]);
    let value = norms.add_scalar(-1.0).square().mean().scale(lambda);
    Ok(Penalty { grad_norms: norms.to_vec(), value, interpolated: x_hat.detach() })
}
