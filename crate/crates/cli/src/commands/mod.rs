use std::path::Path;

use condgan::dataset::{DatasetManifest, MANIFEST_FILE};
use condgan::labels::{ConditionedDataset, LABELS_FILE};
use condgan::train::{load_checkpoint, Checkpoint, STATE_FILE};
use sha2::{Digest, Sha256};

use crate::{invalid, Failure};

pub mod evaluate;
pub mod generate;
pub mod label;
pub mod prepare;
pub mod train;

/// Reads a fixture named by `flag`; a missing file is a usage error.
fn read_input(path: &Path, flag: &str) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| invalid(format!("{flag} {}: {e}", path.display())))
}

fn require_dataset(dir: &Path, flag: &str) -> Result<DatasetManifest, Failure> {
    if !dir.join(MANIFEST_FILE).is_file() {
        return Err(invalid(format!("{flag} {}: no {MANIFEST_FILE}; run `condgan prepare` first", dir.display())));
    }
    Ok(DatasetManifest::load(dir)?)
}

fn require_labels(dir: &Path) -> Result<ConditionedDataset, Failure> {
    if !dir.join(LABELS_FILE).is_file() {
        return Err(invalid(format!(
            "{} has no {LABELS_FILE}; run `condgan label` first or pass --unconditional",
            dir.display()
        )));
    }
    Ok(ConditionedDataset::load(dir)?)
}

fn require_checkpoint(dir: &Path, flag: &str) -> Result<Checkpoint, Failure> {
    if !dir.join(STATE_FILE).is_file() {
        return Err(invalid(format!("{flag} {}: not a checkpoint directory (no {STATE_FILE})", dir.display())));
    }
    Ok(load_checkpoint(dir)?)
}

/// `step<N>-<hash>`: names a checkpoint by content, not location.
fn checkpoint_id(dir: &Path, step: u64) -> Result<String, Failure> {
    let path = dir.join(condgan::model::PARAMS_FILE);
    let bytes = std::fs::read(&path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let hash: String = Sha256::digest(&bytes).iter().take(6).map(|b| format!("{b:02x}")).collect();
    Ok(format!("step{step}-{hash}"))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))
}
