use condgan::dataset::{prepare_dataset, FixtureDetector, IngestOptions, PrepareOptions, TextFilter};
use serde_json::json;

use super::read_input;
use crate::record::{write_run_record, RunRecord};
use crate::{invalid, Failure, PrepareArgs};

pub fn run(a: &PrepareArgs, argv: &[String]) -> Result<(), Failure> {
    if !a.input.is_dir() {
        return Err(invalid(format!("--in {}: not a directory", a.input.display())));
    }
    let filter = match &a.ocr_fixture {
        Some(p) => TextFilter::Fixture(FixtureDetector::from_json(&read_input(p, "--ocr-fixture")?)?),
        None => TextFilter::Off,
    };
    let opts = PrepareOptions { ingest: IngestOptions::new(a.max_res, a.seed), filter, min_chars: a.min_chars, force: a.force };
    let out = prepare_dataset(&a.input, &a.out, &opts)?;
    let m = &out.manifest;
    say!("kept {}, dropped {}", m.kept_count(), m.dropped_count());
    if out.filter.detector_failures > 0 {
        say!("text detection failed on {} images (kept)", out.filter.detector_failures);
    }
    let resolved = json!({
        "resolutions": m.resolutions,
        "kept": m.kept_count(),
        "dropped": m.dropped_count(),
        "skipped": out.skipped.len(),
        "text_filter": if a.ocr_fixture.is_some() { "fixture" } else { "off" },
    });
    write_run_record(&a.out, &RunRecord::new("prepare", argv, a, resolved), true)?;
    Ok(())
}
