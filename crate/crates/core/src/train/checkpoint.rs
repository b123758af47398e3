//! Checkpoint directories: `params.bin` (weights, optimizer moments, class
//! embedding) and `state.json` (schedule position, seed, config echo).

use std::fs;
use std::path::{Path, PathBuf};

use condgan_autograd::Adam;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::model::{ModelPair, ParamArchive, PARAMS_FILE};

pub const STATE_FILE: &str = "state.json";
pub const CHECKPOINT_DIR: &str = "checkpoints";

/// Position in the schedule plus everything needed to rebuild the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainState {
    /// Completed generator steps.
    pub step: u64,
    pub images_seen: u64,
    pub phase: usize,
    pub alpha: f64,
    pub seed: u64,
    pub g_adam_step: u64,
    pub d_adam_step: u64,
    /// Fraction of the dataset in each class, for label sampling and
    /// truncation centers.
    pub class_weights: Vec<f64>,
    pub config: ExperimentConfig,
    /// Set on checkpoints written because training diverged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

pub fn checkpoint_dir(out_dir: &Path, step: u64) -> PathBuf {
    out_dir.join(CHECKPOINT_DIR).join(format!("step{step}"))
}

/// Model weights, optimizer state and train state, as stored on disk.
pub struct Checkpoint {
    pub state: TrainState,
    pub model: ModelPair,
    pub g_opt: Option<Adam>,
    pub d_opt: Option<Adam>,
}

pub fn save_checkpoint(dir: &Path, state: &TrainState, model: &ModelPair, g_opt: &Adam, d_opt: &Adam) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut archive = model.to_archive();
    archive.push_buffers("adam_g_m/", &model.g_params, &g_opt.m);
    archive.push_buffers("adam_g_v/", &model.g_params, &g_opt.v);
    archive.push_buffers("adam_d_m/", &model.d_params, &d_opt.m);
    archive.push_buffers("adam_d_v/", &model.d_params, &d_opt.v);
    let params = dir.join(PARAMS_FILE);
    fs::write(&params, archive.encode()).map_err(|e| Error::io(&params, e))?;
    let state_path = dir.join(STATE_FILE);
    let json = serde_json::to_string_pretty(state).expect("state serializes") + "\n";
    fs::write(&state_path, json).map_err(|e| Error::io(&state_path, e))
}

pub fn load_state(dir: &Path) -> Result<TrainState> {
    let path = dir.join(STATE_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
}

/// Loads a checkpoint. Optimizer state is restored when present; weights
/// and class embedding must match the configured architecture exactly.
pub fn load_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let state = load_state(dir)?;
    state.config.validate()?;
    let path = dir.join(PARAMS_FILE);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let archive = ParamArchive::decode(&bytes)?;
    let model = ModelPair::from_archive(state.config.generator.clone(), state.seed, &archive)?;
    let train = &state.config.train;
    let restore = |prefix: &str, store, lr: f64, step: u64| -> Result<Option<Adam>> {
        let m_prefix = format!("adam_{prefix}_m/");
        if archive.entries.iter().all(|e| !e.name.starts_with(&m_prefix)) {
            return Ok(None);
        }
        let mut opt = Adam::new(store, train.adam(lr));
        opt.m = archive.load_buffers(&m_prefix, store)?;
        opt.v = archive.load_buffers(&format!("adam_{prefix}_v/"), store)?;
        opt.step = step;
        Ok(Some(opt))
    };
    let g_opt = restore("g", &model.g_params, train.g_lr, state.g_adam_step)?;
    let d_opt = restore("d", &model.d_params, train.d_lr, state.d_adam_step)?;
    Ok(Checkpoint { state, model, g_opt, d_opt })
}
