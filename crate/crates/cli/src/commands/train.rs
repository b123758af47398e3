use condgan::dataset::DatasetStore;
use condgan::train::{ExperimentConfig, Trainer};
use serde_json::json;

use super::{require_checkpoint, require_dataset, require_labels};
use crate::record::{write_run_record, RunRecord};
use crate::{invalid, Failure, TrainArgs};

/// Reads the config file (defaults for omitted keys) and applies flag overrides.
fn resolve_config(a: &TrainArgs) -> Result<ExperimentConfig, Failure> {
    let mut config = match &a.config {
        Some(p) if !p.is_file() => return Err(invalid(format!("--config {}: no such file", p.display()))),
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(m) = a.max_steps {
        config.train.max_steps = Some(m);
    }
    if let Some(t) = a.total_images {
        config.train.total_images = t;
    }
    if a.unconditional {
        config.generator.classes = 0;
    }
    Ok(config)
}

pub fn run(a: &TrainArgs, argv: &[String]) -> Result<(), Failure> {
    require_dataset(&a.dataset, "--dataset")?;
    // a fresh run's config errors come before missing-label errors
    let fresh = if a.resume.is_none() { Some(resolve_config(a)?) } else { None };
    let store = DatasetStore::open(&a.dataset)?;
    let labels = if a.unconditional { None } else { Some(require_labels(&a.dataset)?) };
    let trainer = match (&a.resume, fresh) {
        (Some(ckpt), _) => {
            require_checkpoint(ckpt, "--resume")?;
            if a.seed.is_some() {
                return Err(invalid("--seed cannot change a resumed run"));
            }
            if a.config.is_some() {
                log::warn!("--resume: continuing with the checkpoint's config, not --config");
            }
            let mut t = Trainer::resume(ckpt, &store, labels.as_ref(), &a.out)?;
            let train = &t.config().train;
            let total = a.total_images.unwrap_or(train.total_images);
            let max_steps = a.max_steps.or(train.max_steps);
            t.set_budget(total, max_steps)?;
            t
        }
        (None, Some(config)) => Trainer::new(config, &store, labels.as_ref(), &a.out)?,
        (None, None) => unreachable!("fresh runs always resolve a config"),
    };
    let resolved = json!({
        "config": trainer.config(),
        "start_step": trainer.state().step,
        "start_images_seen": trainer.state().images_seen,
    });
    write_run_record(&a.out, &RunRecord::new("train", argv, a, resolved), true)?;
    let outcome = trainer.run()?;
    let s = &outcome.state;
    say!("trained to step {} ({} images), phase {} alpha {}", s.step, s.images_seen, s.phase, s.alpha);
    say!("checkpoint: {}", outcome.checkpoint.display());
    say!("metrics: {}", outcome.metrics.display());
    Ok(())
}
