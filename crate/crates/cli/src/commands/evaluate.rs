use condgan::dataset::DatasetStore;
use condgan::eval::{evaluate_model, truncation_sweep, EvalOptions, TruncationState, EVAL_REPORT_FILE};
use condgan::labels::ToyFeatureExtractor;
use condgan::model::LatentGenerator;
use serde_json::json;

use super::{checkpoint_id, create_dir, require_checkpoint, require_dataset, require_labels};
use crate::record::{write_run_record, RunRecord};
use crate::{invalid, EvaluateArgs, Failure};

pub fn run(a: &EvaluateArgs, argv: &[String]) -> Result<(), Failure> {
    if a.sweep.iter().any(|p| !p.is_finite()) {
        return Err(invalid("--sweep values must be finite"));
    }
    if !a.sweep.is_empty() && a.sweep_samples == 0 {
        return Err(invalid("--sweep-samples must be at least 1"));
    }
    let ckpt = require_checkpoint(&a.ckpt, "--ckpt")?;
    require_dataset(&a.dataset, "--dataset")?;
    let store = DatasetStore::open(&a.dataset)?;
    let state = &ckpt.state;
    let view = ckpt.model.view(state.phase, state.alpha)?;
    let c = view.num_classes();
    let labels = if c > 0 { Some(require_labels(&a.dataset)?) } else { None };
    let featurizer = ToyFeatureExtractor::default();
    let id = checkpoint_id(&a.ckpt, state.step)?;
    let opts = EvalOptions { n_samples: a.n, seed: a.seed, checkpoint: Some(id.clone()) };
    let report = evaluate_model(&view, &store, labels.as_ref(), &featurizer, &opts)?;

    let out = a.out.clone().unwrap_or_else(|| a.ckpt.clone());
    create_dir(&out)?;
    let path = out.join(EVAL_REPORT_FILE);
    report.save(&path)?;
    let mut sweeps = Vec::new();
    if !a.sweep.is_empty() {
        let weights = (!state.class_weights.is_empty()).then_some(state.class_weights.as_slice());
        let trunc = TruncationState::compute(&view, weights, state.config.train.truncation_samples, a.seed)?;
        let classes: Vec<usize> = (0..c).collect();
        sweeps = truncation_sweep(&view, &trunc, &a.sweep, &classes, a.sweep_samples, a.seed, &out)?;
    }

    say!("FID {:.4}  IS {:.4} ({} classes)  n = {}", report.fid, report.is_score, report.is_classes, report.n_samples);
    for (k, d) in &report.per_class_diversity {
        say!("class {k}: diversity {d:.4}");
    }
    say!("report: {}", path.display());
    for s in &sweeps {
        say!("sweep: {}", s.display());
    }
    let resolved = json!({
        "checkpoint": id,
        "featurizer": report.featurizer,
        "phase": state.phase,
        "alpha": state.alpha,
        "classes": c,
    });
    write_run_record(&out, &RunRecord::new("evaluate", argv, a, resolved), false)?;
    Ok(())
}
