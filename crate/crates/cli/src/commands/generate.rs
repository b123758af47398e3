use condgan::eval::TruncationState;
use condgan::model::LatentGenerator;
use condgan::train::snapshot_grid;
use serde_json::json;

use super::{checkpoint_id, create_dir, require_checkpoint};
use crate::record::{write_sidecar, RunRecord};
use crate::{invalid, ClassArg, Failure, GenerateArgs};

pub fn run(a: &GenerateArgs, argv: &[String]) -> Result<(), Failure> {
    if a.n == 0 {
        return Err(invalid("--n must be at least 1"));
    }
    if !a.psi.is_finite() {
        return Err(invalid("--psi must be finite"));
    }
    let ckpt = require_checkpoint(&a.ckpt, "--ckpt")?;
    let state = &ckpt.state;
    let view = ckpt.model.view(state.phase, state.alpha)?;
    let c = view.num_classes();
    let classes: Vec<usize> = match a.class {
        ClassArg::All => (0..c).collect(),
        ClassArg::One(_) if c == 0 => return Err(invalid("the model is unconditional; use --class all")),
        ClassArg::One(k) if k >= c => return Err(invalid(format!("--class {k} out of range for {c} classes"))),
        ClassArg::One(k) => vec![k],
    };
    let weights = (!state.class_weights.is_empty()).then_some(state.class_weights.as_slice());
    let trunc = TruncationState::compute(&view, weights, state.config.train.truncation_samples, a.seed)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    snapshot_grid(&view, &trunc, &classes, a.n, a.psi, a.seed, &a.out)?;
    let rows = classes.len().max(1);
    say!("wrote {}: {rows}×{} grid of {}px samples", a.out.display(), a.n, view.resolution());
    let resolved = json!({
        "checkpoint": checkpoint_id(&a.ckpt, state.step)?,
        "classes": classes,
        "phase": state.phase,
        "alpha": state.alpha,
        "truncation_samples": trunc.samples,
    });
    write_sidecar(&a.out, &RunRecord::new("generate", argv, a, resolved))?;
    Ok(())
}
