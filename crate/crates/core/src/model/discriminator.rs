//! Progressive critic conditioned through constant class maps at the input.

use condgan_autograd::{Bound, ParamStore, Tensor};
use rand::Rng;

use super::config::{resolution_of, GeneratorConfig};
use super::latent::one_hot_classes;
use super::layers::{progressive_blend, Conv, Dense, LRELU_SLOPE};
use crate::error::{invalid, Result};

#[derive(Debug, Clone)]
struct DownBlock {
    conv0: Conv,
    conv1: Conv,
}

impl DownBlock {
    fn forward(&self, p: &Bound, x: &Tensor) -> Tensor {
        let h = self.conv0.forward(p, x).leaky_relu(LRELU_SLOPE);
        self.conv1.forward(p, &h).leaky_relu(LRELU_SLOPE).avg_pool2()
    }
}

#[derive(Debug, Clone)]
pub struct Discriminator {
    classes: usize,
    from_rgb: Vec<Conv>,
    /// Indexed by phase; the 4×4 phase has no down block.
    blocks: Vec<Option<DownBlock>>,
    final_conv: Conv,
    dense0: Dense,
    dense1: Dense,
    base_channels: usize,
}

impl Discriminator {
    pub fn new(config: &GeneratorConfig, store: &mut ParamStore, rng: &mut impl Rng) -> Self {
        let eq = config.equalized_lr;
        let gain = 2f64.sqrt();
        let c = config.classes;
        let mut from_rgb = Vec::new();
        let mut blocks = Vec::new();
        for (phase, res) in config.resolutions().into_iter().enumerate() {
            let ch = config.channels_at(res);
            from_rgb.push(Conv::new(store, &format!("from_rgb.{res}"), 3 + c, ch, 1, gain, eq, rng));
            blocks.push((phase > 0).then(|| {
                let next = config.channels_at(res / 2);
                DownBlock {
                    conv0: Conv::new(store, &format!("critic.{res}.conv0"), ch, ch, 3, gain, eq, rng),
                    conv1: Conv::new(store, &format!("critic.{res}.conv1"), ch, next, 3, gain, eq, rng),
                }
            }));
        }
        let c4 = config.channels_at(4);
        let final_conv = Conv::new(store, "critic.4.conv", c4, c4, 3, gain, eq, rng);
        let dense0 = Dense::new(store, "critic.4.dense0", c4 * 16, c4, gain, eq, vec![0.0; c4], rng);
        let dense1 = Dense::new(store, "critic.4.dense1", c4, 1, 1.0, eq, vec![0.0], rng);
        Self { classes: c, from_rgb, blocks, final_conv, dense0, dense1, base_channels: c4 }
    }

    pub fn max_phase(&self) -> usize {
        self.blocks.len() - 1
    }

    /// Critic scores `[n]` for images `[n, 3, r, r]` paired with one-hot `y`.
    pub fn forward(&self, p: &Bound, images: &Tensor, y: &Tensor, phase: usize, alpha: f64) -> Result<Tensor> {
        if phase > self.max_phase() {
            return Err(invalid(format!("phase {phase} beyond the last phase {}", self.max_phase())));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(invalid(format!("alpha {alpha} outside [0, 1]")));
        }
        let res = resolution_of(phase);
        if images.rank() != 4 || images.shape()[1..] != [3, res, res] {
            return Err(invalid(format!("phase {phase} expects [n, 3, {res}, {res}] images, got {:?}", images.shape())));
        }
        let n = images.dim(0);
        if y.rank() != 2 || y.dim(0) != n || y.dim(1) != self.classes {
            return Err(invalid(format!("conditions must be [{n}, {}], got {:?}", self.classes, y.shape())));
        }
        one_hot_classes(y)?;
        let input = if self.classes == 0 {
            images.clone()
        } else {
            let maps = y.reshape(&[n, self.classes, 1, 1]).broadcast_to(&[n, self.classes, res, res]);
            Tensor::concat(&[images.clone(), maps], 1)
        };

        let mut h = self.from_rgb[phase].forward(p, &input).leaky_relu(LRELU_SLOPE);
        if phase > 0 {
            h = self.blocks[phase].as_ref().expect("down block").forward(p, &h);
            if alpha < 1.0 {
                let low = self.from_rgb[phase - 1].forward(p, &input.avg_pool2()).leaky_relu(LRELU_SLOPE);
                h = progressive_blend(&low, &h, alpha)?;
            }
            for block in self.blocks[1..phase].iter().rev() {
                h = block.as_ref().expect("down block").forward(p, &h);
            }
        }
        let h = self.final_conv.forward(p, &h).leaky_relu(LRELU_SLOPE);
        let h = h.reshape(&[n, self.base_channels * 16]);
        let h = self.dense0.forward(p, &h).leaky_relu(LRELU_SLOPE);
        Ok(self.dense1.forward(p, &h).reshape(&[n]))
    }
}
