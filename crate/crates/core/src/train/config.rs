use std::collections::BTreeMap;
use std::path::Path;

use condgan_autograd::AdamConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GeneratorConfig;

/// Training-loop hyperparameters. Image counts are in real images shown to
/// the critic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Stabilization images per resolution.
    pub images_per_phase: u64,
    /// Blending images while a new resolution fades in.
    pub images_per_transition: u64,
    /// Minibatch size at each resolution.
    pub batch_size: BTreeMap<usize, usize>,
    pub g_lr: f64,
    pub d_lr: f64,
    /// Learning-rate multiplier for the mapping network.
    pub mapping_lr_scale: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub gp_lambda: f64,
    /// Critic updates per generator update.
    pub critic_steps: usize,
    /// Steps between metrics rows.
    pub log_every: u64,
    /// Steps between sample grids.
    pub snapshot_every: u64,
    /// Steps between checkpoints.
    pub checkpoint_every: u64,
    /// Training stops once this many images have been seen.
    pub total_images: u64,
    /// Optional hard cap on generator steps. `Some(0)` writes the initial
    /// checkpoint and stops.
    pub max_steps: Option<u64>,
    pub grid_samples: usize,
    pub grid_psis: Vec<f64>,
    /// Draws used for the center of mass behind truncated grids.
    pub truncation_samples: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            images_per_phase: 20_000,
            images_per_transition: 20_000,
            batch_size: BTreeMap::from([(4, 32), (8, 32), (16, 32), (32, 16)]),
            g_lr: 1e-3,
            d_lr: 1e-3,
            mapping_lr_scale: 1.0,
            beta1: 0.0,
            beta2: 0.99,
            adam_eps: 1e-8,
            gp_lambda: 10.0,
            critic_steps: 1,
            log_every: 10,
            snapshot_every: 500,
            checkpoint_every: 1000,
            total_images: 140_000,
            max_steps: None,
            grid_samples: 8,
            grid_psis: vec![1.0],
            truncation_samples: 2048,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, resolutions: &[usize]) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.images_per_phase == 0 || self.images_per_transition == 0 || self.total_images == 0 {
            return bad("image counts must be positive");
        }
        if self.critic_steps == 0 || self.log_every == 0 || self.snapshot_every == 0 || self.checkpoint_every == 0 {
            return bad("step counts and cadences must be positive");
        }
        if !(self.gp_lambda >= 0.0 && self.gp_lambda.is_finite()) {
            return bad("gp_lambda must be ≥ 0");
        }
        for lr in [self.g_lr, self.d_lr, self.mapping_lr_scale, self.adam_eps] {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad("learning rates, mapping_lr_scale and adam_eps must be positive");
            }
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)");
        }
        for res in resolutions {
            match self.batch_size.get(res) {
                Some(&b) if b > 0 => {}
                _ => return Err(Error::Config(format!("no batch size for resolution {res}"))),
            }
        }
        if self.grid_samples == 0 || self.truncation_samples == 0 {
            return bad("grid_samples and truncation_samples must be positive");
        }
        if self.grid_psis.iter().any(|p| !p.is_finite()) {
            return bad("grid_psis must be finite");
        }
        Ok(())
    }

    pub fn adam(&self, lr: f64) -> AdamConfig {
        AdamConfig { lr, beta1: self.beta1, beta2: self.beta2, eps: self.adam_eps }
    }
}

/// Contents of `config.json`: every architecture and training knob plus the
/// run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub generator: GeneratorConfig,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { seed: 0, generator: GeneratorConfig::default(), train: TrainConfig::default() }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.train.validate(&self.generator.resolutions())
    }
}
