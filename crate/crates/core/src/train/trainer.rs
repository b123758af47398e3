use std::fs;
use std::path::{Path, PathBuf};

use condgan_autograd::{grad, no_grad, Adam, ParamId, ParamStore, Tensor};

use super::checkpoint::{checkpoint_dir, load_checkpoint, save_checkpoint, TrainState, CHECKPOINT_DIR};
use super::config::ExperimentConfig;
use super::grid::{grid_file_name, snapshot_grid};
use super::metrics::{MetricsLog, MetricsRow};
use super::schedule::schedule_phase;
use crate::dataset::{one_hot, DatasetStore};
use crate::error::{invalid, Error, Result};
use crate::eval::TruncationState;
use crate::imaging::normal_tensor;
use crate::labels::ConditionedDataset;
use crate::model::{
    gradient_penalty, resolution_of, wgan_d_loss, wgan_g_loss, BoundCritic, LossTerms, ModelPair, NoiseSource,
};
use crate::rng::{derive_seed, stream, tag};

pub const GRID_DIR: &str = "grids";

/// Where a finished (or stopped) run left its artifacts.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub state: TrainState,
    pub checkpoint: PathBuf,
    pub metrics: PathBuf,
    pub grids: Vec<PathBuf>,
}

/// Owns the model, optimizers and schedule position of one run.
pub struct Trainer<'a> {
    config: ExperimentConfig,
    model: ModelPair,
    g_opt: Adam,
    d_opt: Adam,
    store: &'a DatasetStore,
    labels: Option<&'a ConditionedDataset>,
    out_dir: PathBuf,
    metrics: MetricsLog,
    state: TrainState,
    grids: Vec<PathBuf>,
}

/// Resolves `classes = 0` against the labels and checks the dataset can
/// feed every configured resolution.
fn preflight(config: &mut ExperimentConfig, store: &DatasetStore, labels: Option<&ConditionedDataset>) -> Result<()> {
    match labels {
        Some(l) => {
            if config.generator.classes == 0 {
                config.generator.classes = l.k;
            } else if config.generator.classes != l.k {
                return Err(invalid(format!("config has {} classes but the labels have {}", config.generator.classes, l.k)));
            }
            l.check_coverage(store.manifest())?;
        }
        None if config.generator.classes != 0 => {
            return Err(invalid(format!("config has {} classes but no labels were given", config.generator.classes)));
        }
        None => {}
    }
    config.validate()?;
    for res in config.generator.resolutions() {
        if !store.manifest().resolutions.contains(&(res as u32)) {
            return Err(invalid(format!("dataset has no {res}×{res} images (max_resolution too large?)")));
        }
    }
    if store.is_empty() {
        return Err(invalid("dataset has no kept images"));
    }
    Ok(())
}

fn mapping_ids(store: &ParamStore) -> Vec<ParamId> {
    (0..store.len()).map(ParamId).filter(|&id| store.get(id).name.starts_with("mapping.")).collect()
}

fn scale_mapping(opt: &mut Adam, store: &ParamStore, scale: f64) {
    for id in mapping_ids(store) {
        opt.set_lr_scale(id, scale);
    }
}

impl<'a> Trainer<'a> {
    /// A fresh run. `config.generator.classes = 0` takes K from the labels.
    pub fn new(
        mut config: ExperimentConfig,
        store: &'a DatasetStore,
        labels: Option<&'a ConditionedDataset>,
        out_dir: &Path,
    ) -> Result<Self> {
        preflight(&mut config, store, labels)?;
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let model = ModelPair::new(config.generator.clone(), config.seed)?;
        let mut g_opt = Adam::new(&model.g_params, config.train.adam(config.train.g_lr));
        let d_opt = Adam::new(&model.d_params, config.train.adam(config.train.d_lr));
        scale_mapping(&mut g_opt, &model.g_params, config.train.mapping_lr_scale);
        let class_weights = labels.map(|l| l.class_frequencies()).unwrap_or_default();
        let state = TrainState {
            step: 0,
            images_seen: 0,
            phase: 0,
            alpha: 1.0,
            seed: config.seed,
            g_adam_step: 0,
            d_adam_step: 0,
            class_weights,
            config: config.clone(),
            diagnostic: None,
        };
        let metrics = MetricsLog::create(out_dir)?;
        Ok(Self { config, model, g_opt, d_opt, store, labels, out_dir: out_dir.to_path_buf(), metrics, state, grids: Vec::new() })
    }

    /// Continues from a checkpoint written by an earlier run. The metrics log
    /// in `out_dir` is cut back to the checkpoint step.
    pub fn resume(
        checkpoint: &Path,
        store: &'a DatasetStore,
        labels: Option<&'a ConditionedDataset>,
        out_dir: &Path,
    ) -> Result<Self> {
        let ckpt = load_checkpoint(checkpoint)?;
        let mut config = ckpt.state.config.clone();
        preflight(&mut config, store, labels)?;
        if config != ckpt.state.config {
            return Err(invalid("checkpoint config does not match the dataset"));
        }
        let model = ckpt.model;
        let mut g_opt = ckpt.g_opt.ok_or_else(|| Error::Checkpoint("no generator optimizer state".into()))?;
        let d_opt = ckpt.d_opt.ok_or_else(|| Error::Checkpoint("no critic optimizer state".into()))?;
        scale_mapping(&mut g_opt, &model.g_params, config.train.mapping_lr_scale);
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let metrics = MetricsLog::resume(out_dir, ckpt.state.step)?;
        let mut state = ckpt.state;
        state.diagnostic = None;
        Ok(Self { config, model, g_opt, d_opt, store, labels, out_dir: out_dir.to_path_buf(), metrics, state, grids: Vec::new() })
    }

    /// Changes when the run stops. The schedule does not depend on either
    /// value, so a resumed run may extend or shorten its budget.
    pub fn set_budget(&mut self, total_images: u64, max_steps: Option<u64>) -> Result<()> {
        if total_images == 0 {
            return Err(Error::Config("total_images must be positive".into()));
        }
        for t in [&mut self.config.train, &mut self.state.config.train] {
            t.total_images = total_images;
            t.max_steps = max_steps;
        }
        Ok(())
    }

    pub fn state(&self) -> &TrainState {
        &self.state
    }

    pub fn model(&self) -> &ModelPair {
        &self.model
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn schedule(&self, images_seen: u64) -> (usize, f64) {
        let t = &self.config.train;
        schedule_phase(images_seen, t.images_per_phase, t.images_per_transition, self.config.generator.max_phase())
    }

    fn done(&self) -> bool {
        let t = &self.config.train;
        self.state.images_seen >= t.total_images || t.max_steps.is_some_and(|m| self.state.step >= m)
    }

    /// Runs until the image budget or step cap is reached, then writes a
    /// final checkpoint and grid.
    pub fn run(mut self) -> Result<TrainOutcome> {
        while !self.done() {
            self.step()?;
        }
        let (ckpt_every, snap_every) = (self.config.train.checkpoint_every, self.config.train.snapshot_every);
        let step = self.state.step;
        let ckpt = checkpoint_dir(&self.out_dir, step);
        if step % ckpt_every != 0 || step == 0 {
            self.checkpoint(&ckpt)?;
        }
        if step % snap_every != 0 || step == 0 {
            self.snapshot()?;
        }
        Ok(TrainOutcome { state: self.state, checkpoint: ckpt, metrics: self.metrics.path().to_path_buf(), grids: self.grids })
    }

    /// Runs at most `n` more steps (stopping early at the budget) without
    /// the end-of-run checkpoint.
    pub fn run_steps(&mut self, n: u64) -> Result<()> {
        for _ in 0..n {
            if self.done() {
                break;
            }
            self.step()?;
        }
        Ok(())
    }

    /// One generator update preceded by `critic_steps` critic updates.
    pub fn step(&mut self) -> Result<LossTerms> {
        let terms = self.train_step()?;
        self.state.step += 1;
        let step = self.state.step;
        let values = [("d_loss", terms.d_loss), ("g_loss", terms.g_loss), ("gradient penalty", terms.gradient_penalty)];
        let params_ok = self.model.g_params.all_finite() && self.model.d_params.all_finite();
        if let Some((what, _)) = values.iter().find(|(_, v)| !v.is_finite()).or((!params_ok).then_some(&("parameters", 0.0))) {
            let dir = self.out_dir.join(CHECKPOINT_DIR).join(format!("diagnostic_step{step}"));
            self.state.diagnostic = Some(format!("non-finite {what}"));
            self.checkpoint(&dir)?;
            return Err(Error::NonFinite { step, what: what.to_string() });
        }
        let t = self.config.train.clone();
        if step % t.log_every == 0 {
            self.metrics.append(&MetricsRow {
                step,
                images_seen: self.state.images_seen,
                phase: self.state.phase,
                alpha: self.state.alpha,
                d_loss: terms.d_loss,
                g_loss: terms.g_loss,
                gp: terms.gradient_penalty,
            })?;
        }
        if step % t.checkpoint_every == 0 {
            self.checkpoint(&checkpoint_dir(&self.out_dir, step))?;
        }
        if step % t.snapshot_every == 0 {
            self.snapshot()?;
        }
        Ok(terms)
    }

    fn train_step(&mut self) -> Result<LossTerms> {
        let (phase, alpha) = self.schedule(self.state.images_seen);
        self.state.phase = phase;
        self.state.alpha = alpha;
        let res = resolution_of(phase);
        let t = &self.config.train;
        let batch = t.batch_size[&res];
        let seed = self.config.seed;
        let s = self.state.step;
        let d = self.config.generator.latent_dim;
        let (gen, disc) = (&self.model.generator, &self.model.discriminator);

        let mut d_loss = 0.0;
        let mut penalty = 0.0;
        let mut interpolated = Tensor::zeros(&[0]);
        for i in 0..t.critic_steps as u64 {
            let real = self.store.load_batch(self.labels, res as u32, batch, derive_seed(seed, &[tag::REAL, s, i]))?;
            let z = normal_tensor(&[batch, d], &mut stream(seed, &[tag::LATENT, s, i]));
            let fake = no_grad(|| -> Result<Tensor> {
                let g = self.model.g_params.bind(false);
                let w = self.model.latents(&g, &z, &real.conditions)?.w;
                gen.synthesize(&g, &w, NoiseSource::PerSample(derive_seed(seed, &[tag::NOISE, s, i])), phase, alpha)
            })?;
            let dp = self.model.d_params.bind(true);
            let critic = BoundCritic { discriminator: disc, params: &dp, phase, alpha };
            let real_scores = disc.forward(&dp, &real.images, &real.conditions, phase, alpha)?;
            let fake_scores = disc.forward(&dp, &fake, &real.conditions, phase, alpha)?;
            let loss = wgan_d_loss(&real_scores, &fake_scores);
            let gp = gradient_penalty(
                &critic,
                &real.images,
                &fake,
                &real.conditions,
                t.gp_lambda,
                &mut stream(seed, &[tag::PENALTY, s, i]),
            )?;
            let total = loss.add(&gp.value);
            let grads = grad(&total, &dp.tensors(), false);
            self.d_opt.update(&mut self.model.d_params, &grads);
            self.state.images_seen += batch as u64;
            d_loss = loss.item();
            penalty = gp.value.item();
            interpolated = gp.interpolated;
        }

        let indices = self.store.sample_indices(batch, derive_seed(seed, &[tag::GEN_LABELS, s]))?;
        let classes = match self.labels {
            Some(l) => self.store.classes_of(l, &indices)?,
            None => vec![0; batch],
        };
        let y = one_hot(&classes, self.config.generator.classes);
        let z = normal_tensor(&[batch, d], &mut stream(seed, &[tag::LATENT, s, t.critic_steps as u64]));
        let gp_params = self.model.g_params.bind(true);
        let dp = self.model.d_params.bind(false);
        let w = self.model.latents(&gp_params, &z, &y)?.w;
        let noise = NoiseSource::PerSample(derive_seed(seed, &[tag::NOISE, s, t.critic_steps as u64]));
        let fake = gen.synthesize(&gp_params, &w, noise, phase, alpha)?;
        let g_loss = wgan_g_loss(&disc.forward(&dp, &fake, &y, phase, alpha)?);
        let grads = grad(&g_loss, &gp_params.tensors(), false);
        self.g_opt.update(&mut self.model.g_params, &grads);

        self.state.g_adam_step = self.g_opt.step;
        self.state.d_adam_step = self.d_opt.step;
        Ok(LossTerms { d_loss, g_loss: g_loss.item(), gradient_penalty: penalty, lambda: t.gp_lambda, interpolated })
    }

    /// Writes `checkpoints/step<N>/` (or `dir`) for the current state.
    pub fn checkpoint(&mut self, dir: &Path) -> Result<()> {
        let (phase, alpha) = self.schedule(self.state.images_seen);
        self.state.phase = phase;
        self.state.alpha = alpha;
        save_checkpoint(dir, &self.state, &self.model, &self.g_opt, &self.d_opt)
    }

    /// Writes one grid per configured ψ at the current phase.
    pub fn snapshot(&mut self) -> Result<()> {
        let (phase, alpha) = self.schedule(self.state.images_seen);
        let view = self.model.view(phase, alpha)?;
        let t = &self.config.train;
        let seed = derive_seed(self.config.seed, &[tag::GRID]);
        let weights = (!self.state.class_weights.is_empty()).then_some(self.state.class_weights.as_slice());
        let trunc = TruncationState::compute(&view, weights, t.truncation_samples, seed)?;
        let classes: Vec<usize> = (0..self.config.generator.classes).collect();
        for &psi in &t.grid_psis {
            let path = self.out_dir.join(GRID_DIR).join(grid_file_name(self.state.step, psi));
            snapshot_grid(&view, &trunc, &classes, t.grid_samples, psi, seed, &path)?;
            self.grids.push(path);
        }
        Ok(())
    }
}
