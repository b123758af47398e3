//! Style-based synthesis network with progressive growth.

use condgan_autograd::{Bound, ParamId, ParamStore, Tensor};
use rand::Rng;

use super::config::GeneratorConfig;
use super::latent::MappingLayers;
use super::layers::{adain, apply_noise, progressive_blend, Conv, Dense, StyleVector, LRELU_SLOPE};
use crate::error::{invalid, Result};
use crate::imaging::normal_tensor;
use crate::rng::{stream, tag};

/// Where the per-layer noise planes come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseSource {
    /// An independent plane for every sample.
    PerSample(u64),
    /// One plane shared by the whole batch.
    Shared(u64),
    Off,
}

impl NoiseSource {
    fn plane(&self, site: usize, n: usize, res: usize) -> Option<Tensor> {
        match *self {
            NoiseSource::PerSample(seed) => {
                Some(normal_tensor(&[n, 1, res, res], &mut stream(seed, &[tag::NOISE, site as u64])))
            }
            NoiseSource::Shared(seed) => {
                Some(normal_tensor(&[1, 1, res, res], &mut stream(seed, &[tag::NOISE, site as u64])))
            }
            NoiseSource::Off => None,
        }
    }
}

/// One AdaIN site: noise, bias, activation, then style modulation.
#[derive(Debug, Clone)]
struct StyleSite {
    index: usize,
    affine: Dense,
    noise_scale: ParamId,
    bias: ParamId,
    channels: usize,
}

impl StyleSite {
    fn new(store: &mut ParamStore, name: &str, index: usize, d: usize, ch: usize, eq: bool, rng: &mut impl Rng) -> Self {
        let mut affine_bias = vec![1.0; ch];
        affine_bias.extend(std::iter::repeat_n(0.0, ch));
        let affine = Dense::new(store, &format!("{name}.style"), d, 2 * ch, 1.0, eq, affine_bias, rng);
        let noise_scale = store.add(format!("{name}.noise_scale"), &[ch], vec![0.0; ch]);
        let bias = store.add(format!("{name}.bias"), &[ch], vec![0.0; ch]);
        Self { index, affine, noise_scale, bias, channels: ch }
    }

    fn forward(&self, p: &Bound, x: &Tensor, w: &Tensor, noise: NoiseSource) -> Result<Tensor> {
        let (n, res) = (x.dim(0), x.dim(2));
        let mut x = match noise.plane(self.index, n, res) {
            Some(plane) => apply_noise(x, &plane, p.get(self.noise_scale))?,
            None => x.clone(),
        };
        x = x.add(&p.get(self.bias).reshape(&[1, self.channels, 1, 1])).leaky_relu(LRELU_SLOPE);
        adain(&x, &StyleVector::from_affine(&self.affine.forward(p, w)))
    }
}

#[derive(Debug, Clone)]
struct SynthBlock {
    /// Absent for the 4×4 block, which starts from the learned constant.
    conv0: Option<Conv>,
    conv1: Conv,
    sites: [StyleSite; 2],
}

/// Parameter layout of the generator. Values live in a separate
/// [`ParamStore`] and are supplied per call as a [`Bound`].
#[derive(Debug, Clone)]
pub struct Generator {
    pub mapping: MappingLayers,
    constant: ParamId,
    blocks: Vec<SynthBlock>,
    to_rgb: Vec<Conv>,
    noise_enabled: bool,
    base_channels: usize,
}

impl Generator {
    pub fn new(config: &GeneratorConfig, store: &mut ParamStore, rng: &mut impl Rng) -> Self {
        let d = config.latent_dim;
        let eq = config.equalized_lr;
        let gain = 2f64.sqrt();
        let mapping = MappingLayers::new(store, config.embedding_width(), d, config.mapping_depth, config.pixel_norm, eq, rng);
        let c4 = config.channels_at(4);
        let constant = store.add("synthesis.const", &[1, c4, 4, 4], vec![1.0; c4 * 16]);
        let mut blocks = Vec::new();
        let mut to_rgb = Vec::new();
        let mut prev = c4;
        for (phase, res) in config.resolutions().into_iter().enumerate() {
            let ch = config.channels_at(res);
            let name = format!("synthesis.{res}");
            let conv0 = (phase > 0).then(|| Conv::new(store, &format!("{name}.conv0"), prev, ch, 3, gain, eq, rng));
            let site0 = StyleSite::new(store, &format!("{name}.site0"), 2 * phase, d, ch, eq, rng);
            let conv1 = Conv::new(store, &format!("{name}.conv1"), ch, ch, 3, gain, eq, rng);
            let site1 = StyleSite::new(store, &format!("{name}.site1"), 2 * phase + 1, d, ch, eq, rng);
            blocks.push(SynthBlock { conv0, conv1, sites: [site0, site1] });
            to_rgb.push(Conv::new(store, &format!("to_rgb.{res}"), ch, 3, 1, 1.0, eq, rng));
            prev = ch;
        }
        Self { mapping, constant, blocks, to_rgb, noise_enabled: config.noise_enabled, base_channels: c4 }
    }

    pub fn max_phase(&self) -> usize {
        self.blocks.len() - 1
    }

    /// Unclamped RGB output `[n, 3, r, r]` for mapped latents `w`.
    pub fn synthesize(&self, p: &Bound, w: &Tensor, noise: NoiseSource, phase: usize, alpha: f64) -> Result<Tensor> {
        if phase > self.max_phase() {
            return Err(invalid(format!("phase {phase} beyond the last phase {}", self.max_phase())));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(invalid(format!("alpha {alpha} outside [0, 1]")));
        }
        if w.rank() != 2 || w.dim(1) != self.mapping.latent_dim {
            return Err(invalid(format!("W must be [n, {}], got {:?}", self.mapping.latent_dim, w.shape())));
        }
        let noise = if self.noise_enabled { noise } else { NoiseSource::Off };
        let n = w.dim(0);
        let mut x = p.get(self.constant).broadcast_to(&[n, self.base_channels, 4, 4]);
        let mut prev = x.clone();
        for (i, block) in self.blocks[..=phase].iter().enumerate() {
            if i > 0 {
                prev = x.clone();
                x = x.upsample2();
            }
            if let Some(conv0) = &block.conv0 {
                x = conv0.forward(p, &x);
            }
            x = block.sites[0].forward(p, &x, w, noise)?;
            x = block.conv1.forward(p, &x);
            x = block.sites[1].forward(p, &x, w, noise)?;
        }
        let high = self.to_rgb[phase].forward(p, &x);
        if phase == 0 || alpha >= 1.0 {
            return Ok(high);
        }
        let low = self.to_rgb[phase - 1].forward(p, &prev).upsample2();
        progressive_blend(&low, &high, alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::one_hot;
    use crate::model::ModelPair;

    fn small() -> GeneratorConfig {
        GeneratorConfig {
            latent_dim: 8,
            classes: 2,
            mapping_depth: 2,
            max_resolution: 16,
            channels: [(4, 8), (8, 6), (16, 4)].into(),
            ..Default::default()
        }
    }

    #[test]
    fn output_shapes_per_phase() {
        let m = ModelPair::new(small(), 1).unwrap();
        let p = m.g_params.bind(false);
        let w = normal_tensor(&[3, 8], &mut stream(0, &[]));
        for phase in 0..=2 {
            let out = m.generator.synthesize(&p, &w, NoiseSource::PerSample(1), phase, 0.5).unwrap();
            assert_eq!(out.shape(), &[3, 3, 4 << phase, 4 << phase]);
            assert!(out.all_finite());
        }
        assert!(m.generator.synthesize(&p, &w, NoiseSource::Off, 3, 1.0).is_err());
    }

    #[test]
    fn alpha_zero_is_upsampled_previous_phase() {
        let m = ModelPair::new(small(), 2).unwrap();
        let p = m.g_params.bind(false);
        let w = normal_tensor(&[2, 8], &mut stream(0, &[]));
        let noise = NoiseSource::PerSample(4);
        let low = m.generator.synthesize(&p, &w, noise, 1, 1.0).unwrap().upsample2();
        let blended = m.generator.synthesize(&p, &w, noise, 2, 0.0).unwrap();
        assert_eq!(low.to_vec(), blended.to_vec());
    }

    #[test]
    fn shared_noise_is_batch_invariant() {
        let mut m = ModelPair::new(small(), 3).unwrap();
        let sites: Vec<usize> =
            m.g_params.iter().enumerate().filter(|(_, p)| p.name.ends_with("noise_scale")).map(|(i, _)| i).collect();
        for i in sites {
            m.g_params.get_mut(ParamId(i)).data.fill(0.5);
        }
        let p = m.g_params.bind(false);
        let row = normal_tensor(&[1, 8], &mut stream(0, &[]));
        let w = Tensor::concat(&[row.clone(), row], 0);
        let out = m.generator.synthesize(&p, &w, NoiseSource::Shared(9), 2, 1.0).unwrap();
        let half = out.numel() / 2;
        assert_eq!(out.data()[..half], out.data()[half..]);
        let per = m.generator.synthesize(&p, &w, NoiseSource::PerSample(9), 2, 1.0).unwrap();
        assert_ne!(per.data()[..half], per.data()[half..]);
    }

    #[test]
    fn classes_change_pixels() {
        let m = ModelPair::new(small(), 4).unwrap();
        let p = m.g_params.bind(false);
        let zrow = normal_tensor(&[1, 8], &mut stream(5, &[]));
        let z = Tensor::concat(&[zrow.clone(), zrow], 0);
        let lat = m.latents(&p, &z, &one_hot(&[0, 1], 2)).unwrap();
        let img = m.generator.synthesize(&p, &lat.w, NoiseSource::Shared(1), 2, 1.0).unwrap();
        let half = img.numel() / 2;
        let d: f64 = (0..half).map(|i| (img.data()[i] - img.data()[half + i]).powi(2)).sum();
        assert!(d.sqrt() > 0.0);
    }
}
