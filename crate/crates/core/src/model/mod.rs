//! Conditional style-based generator, progressive critic and WGAN-GP losses.

mod archive;
mod config;
mod discriminator;
mod generator;
mod latent;
mod layers;
mod loss;
mod view;

use std::path::Path;

use condgan_autograd::{no_grad, Bound, ParamStore, Tensor};

pub use archive::{ArchiveEntry, ParamArchive};
pub use config::{resolution_of, GeneratorConfig};
pub use discriminator::Discriminator;
pub use generator::{Generator, NoiseSource};
pub use latent::{build_conditional_latent, one_hot_classes, BoundMapping, ClassEmbedding, LatentBatch, MappingLayers, MappingNetwork};
pub use layers::{adain, apply_noise, instance_stats, pixel_norm, progressive_blend, Conv, Dense, StyleVector, LRELU_SLOPE, NORM_EPS};
pub use loss::{gradient_penalty, penalty_at, wgan_d_loss, wgan_g_loss, BoundCritic, Critic, LossTerms, Penalty};
pub use view::{clamp_unit, GeneratorView, LatentGenerator};

use crate::error::{Error, Result};
use crate::eval::TruncationState;
use crate::rng::{stream, tag};

pub const PARAMS_FILE: &str = "params.bin";
const EMBEDDING_ENTRY: &str = "class_embedding";

/// Generator and critic layouts with their parameter values and the frozen
/// class embedding.
#[derive(Debug, Clone)]
pub struct ModelPair {
    pub config: GeneratorConfig,
    pub seed: u64,
    pub generator: Generator,
    pub discriminator: Discriminator,
    pub g_params: ParamStore,
    pub d_params: ParamStore,
    pub embedding: ClassEmbedding,
}

impl ModelPair {
    /// Fresh, seeded initialization.
    pub fn new(config: GeneratorConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut g_params = ParamStore::new();
        let mut d_params = ParamStore::new();
        let generator = Generator::new(&config, &mut g_params, &mut stream(seed, &[tag::INIT, 0]));
        let discriminator = Discriminator::new(&config, &mut d_params, &mut stream(seed, &[tag::INIT, 1]));
        let embedding = ClassEmbedding::sample(config.classes, config.embedding_width(), seed);
        Ok(Self { config, seed, generator, discriminator, g_params, d_params, embedding })
    }

    pub fn max_phase(&self) -> usize {
        self.config.max_phase()
    }

    /// W for latents `z` under conditions `y`, using generator parameters `g`.
    pub fn latents(&self, g: &Bound, z: &Tensor, y: &Tensor) -> Result<LatentBatch> {
        build_conditional_latent(z, y, &self.embedding, &self.generator.mapping.bind(g))
    }

    /// Read-only generator at a fixed phase and alpha.
    pub fn view(&self, phase: usize, alpha: f64) -> Result<GeneratorView<'_>> {
        GeneratorView::new(self, phase, alpha)
    }

    pub fn to_archive(&self) -> ParamArchive {
        let mut a = ParamArchive::default();
        a.push_store("g/", &self.g_params);
        a.push_store("d/", &self.d_params);
        a.push(EMBEDDING_ENTRY, &[self.embedding.classes, self.embedding.dim], self.embedding.matrix.clone());
        a
    }

    /// Rebuilds the layout from `config` and fills it from the archive.
    pub fn from_archive(config: GeneratorConfig, seed: u64, archive: &ParamArchive) -> Result<Self> {
        let mut m = Self::new(config, seed)?;
        archive.load_store("g/", &mut m.g_params)?;
        archive.load_store("d/", &mut m.d_params)?;
        let (c, e) = (m.embedding.classes, m.embedding.dim);
        let entry = archive.get(EMBEDDING_ENTRY).ok_or_else(|| Error::Checkpoint("missing class embedding".into()))?;
        if entry.shape != [c, e] {
            return Err(Error::Checkpoint(format!("class embedding is {:?}, config implies [{c}, {e}]", entry.shape)));
        }
        m.embedding = ClassEmbedding::from_matrix(c, e, seed, entry.data.clone())
            .map_err(|err| Error::Checkpoint(err.to_string()))?;
        Ok(m)
    }

    pub fn save_params(&self, dir: &Path) -> Result<()> {
        let path = dir.join(PARAMS_FILE);
        std::fs::write(&path, self.to_archive().encode()).map_err(|e| Error::io(path, e))
    }
}

/// Images in [-1, 1] for mapped latents, optionally truncated toward the
/// center of mass with weight `psi`.
pub fn generator_forward(
    model: &ModelPair,
    latents: &LatentBatch,
    noise_seed: u64,
    phase: usize,
    alpha: f64,
    truncation: Option<(&TruncationState, f64)>,
) -> Result<Tensor> {
    no_grad(|| {
        let view = model.view(phase, alpha)?;
        let w = match truncation {
            Some((state, psi)) => state.apply(&latents.w, &latents.classes(), psi)?,
            None => latents.w.clone(),
        };
        view.synthesize(&w, NoiseSource::PerSample(noise_seed))
    })
}

/// Critic scores `[n]`, without recording a graph.
pub fn discriminator_forward(model: &ModelPair, images: &Tensor, y: &Tensor, phase: usize, alpha: f64) -> Result<Tensor> {
    no_grad(|| model.discriminator.forward(&model.d_params.bind(false), images, y, phase, alpha))
}
