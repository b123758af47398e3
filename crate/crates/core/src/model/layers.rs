//! Building blocks: equalized-learning-rate dense/conv layers, AdaIN, noise
//! injection, pixel norm and the progressive blend.

use condgan_autograd::{Bound, ParamId, ParamStore, Tensor};
use rand::Rng;

use crate::error::{invalid, Result};
use crate::imaging::normal_vec;

pub const LRELU_SLOPE: f64 = 0.2;
/// Floor under the variance in instance normalization.
pub const NORM_EPS: f64 = 1e-8;

/// Weights are stored as N(0, 1) and multiplied by `gain / √fan_in` at run
/// time when equalized learning rate is on; otherwise the scale is baked in.
fn init_weights(n: usize, fan_in: usize, gain: f64, equalized: bool, rng: &mut impl Rng) -> (Vec<f64>, f64) {
    let he = gain / (fan_in as f64).sqrt();
    let raw = normal_vec(n, rng);
    if equalized {
        (raw, he)
    } else {
        (raw.into_iter().map(|v| v * he).collect(), 1.0)
    }
}

/// Fully connected layer, weight shape `[in, out]`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub weight: ParamId,
    pub bias: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
    mult: f64,
}

impl Dense {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        gain: f64,
        equalized: bool,
        bias: Vec<f64>,
        rng: &mut impl Rng,
    ) -> Self {
        assert_eq!(bias.len(), out_dim);
        let (w, mult) = init_weights(in_dim * out_dim, in_dim, gain, equalized, rng);
        let weight = store.add(format!("{name}.weight"), &[in_dim, out_dim], w);
        let bias = store.add(format!("{name}.bias"), &[out_dim], bias);
        Self { weight, bias, in_dim, out_dim, mult }
    }

    pub fn forward(&self, p: &Bound, x: &Tensor) -> Tensor {
        x.matmul(&p.get(self.weight).scale(self.mult)).add(p.get(self.bias))
    }
}

/// Stride-1 "same" convolution with bias.
#[derive(Debug, Clone)]
pub struct Conv {
    pub weight: ParamId,
    pub bias: ParamId,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    mult: f64,
}

impl Conv {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        gain: f64,
        equalized: bool,
        rng: &mut impl Rng,
    ) -> Self {
        let fan_in = in_ch * kernel * kernel;
        let (w, mult) = init_weights(out_ch * fan_in, fan_in, gain, equalized, rng);
        let weight = store.add(format!("{name}.weight"), &[out_ch, in_ch, kernel, kernel], w);
        let bias = store.add(format!("{name}.bias"), &[out_ch], vec![0.0; out_ch]);
        Self { weight, bias, in_ch, out_ch, kernel, mult }
    }

    pub fn forward(&self, p: &Bound, x: &Tensor) -> Tensor {
        let w = p.get(self.weight).scale(self.mult);
        x.conv2d(&w, self.kernel / 2).add(&p.get(self.bias).reshape(&[1, self.out_ch, 1, 1]))
    }
}

/// Per-sample, per-channel scale σ(y) and bias μ(y) for one AdaIN site.
#[derive(Debug, Clone)]
pub struct StyleVector {
    /// `[n, C]`
    pub scale: Tensor,
    /// `[n, C]`
    pub bias: Tensor,
}

impl StyleVector {
    /// Splits an affine output `[n, 2C]` into (scale, bias).
    pub fn from_affine(raw: &Tensor) -> Self {
        let c = raw.dim(1) / 2;
        Self { scale: raw.narrow(1, 0, c), bias: raw.narrow(1, c, c) }
    }
}

/// Per-sample, per-channel spatial mean and standard deviation of `[n, C, H, W]`.
pub fn instance_stats(x: &Tensor) -> (Tensor, Tensor) {
    let mu = x.mean_keepdim(&[2, 3]);
    let var = x.sub(&mu).square().mean_keepdim(&[2, 3]);
    (mu, var.add_scalar(NORM_EPS).sqrt())
}

/// `σ(y) · (x − μ(x)) / σ(x) + μ(y)`, statistics over the spatial axes of
/// each sample and channel.
pub fn adain(x: &Tensor, style: &StyleVector) -> Result<Tensor> {
    if x.rank() != 4 {
        return Err(invalid(format!("adain expects [n, C, H, W], got {:?}", x.shape())));
    }
    let (n, c) = (x.dim(0), x.dim(1));
    for s in [&style.scale, &style.bias] {
        if s.shape() != [n, c] {
            return Err(invalid(format!("style shape {:?} does not match {n}×{c}", s.shape())));
        }
    }
    let (mu, sigma) = instance_stats(x);
    let normalized = x.sub(&mu).div(&sigma);
    Ok(normalized.mul(&style.scale.reshape(&[n, c, 1, 1])).add(&style.bias.reshape(&[n, c, 1, 1])))
}

/// `x + scale_c · noise`, one noise plane per sample shared by all channels.
pub fn apply_noise(x: &Tensor, noise: &Tensor, scale: &Tensor) -> Result<Tensor> {
    if x.rank() != 4 || noise.rank() != 4 {
        return Err(invalid("apply_noise expects rank-4 tensors"));
    }
    let (n, c, h, w) = (x.dim(0), x.dim(1), x.dim(2), x.dim(3));
    if noise.dim(1) != 1 || noise.dim(2) != h || noise.dim(3) != w || (noise.dim(0) != n && noise.dim(0) != 1) {
        return Err(invalid(format!("noise shape {:?} does not match {:?}", noise.shape(), x.shape())));
    }
    if scale.shape() != [c] {
        return Err(invalid(format!("noise scale shape {:?}, expected [{c}]", scale.shape())));
    }
    Ok(x.add(&scale.reshape(&[1, c, 1, 1]).mul(noise)))
}

/// `(1 − alpha) · low + alpha · high`.
pub fn progressive_blend(low: &Tensor, high: &Tensor, alpha: f64) -> Result<Tensor> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid(format!("alpha {alpha} outside [0, 1]")));
    }
    if low.shape() != high.shape() {
        return Err(invalid(format!("blend shapes {:?} vs {:?}", low.shape(), high.shape())));
    }
    Ok(low.scale(1.0 - alpha).add(&high.scale(alpha)))
}

/// Normalizes each row of `[n, F]` to unit root-mean-square.
pub fn pixel_norm(x: &Tensor) -> Tensor {
    x.div(&x.square().mean_keepdim(&[1]).add_scalar(NORM_EPS).sqrt())
}
