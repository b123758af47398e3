//! `run.json`: what each command was asked to do and what it resolved that to.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::Failure;

pub const RUN_FILE: &str = "run.json";

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub version: String,
    pub argv: Vec<String>,
    /// Parsed flags after defaults.
    pub args: Value,
    /// Settings the command actually ran with (configs after merging, counts).
    pub resolved: Value,
}

impl RunRecord {
    pub fn new(command: &str, argv: &[String], args: &impl Serialize, resolved: Value) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            argv: argv.to_vec(),
            args: serde_json::to_value(args).expect("arguments serialize"),
            resolved,
        }
    }
}

fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("json serializes") + "\n";
    fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

/// Stores `record` under its command name in `dir/run.json`. With `fresh`
/// other entries are discarded; otherwise they are kept, so a dataset
/// directory can hold both its `prepare` and `label` records.
pub fn write_run_record(dir: &Path, record: &RunRecord, fresh: bool) -> Result<PathBuf, Failure> {
    let path = dir.join(RUN_FILE);
    let mut entries = Map::new();
    if !fresh {
        if let Some(Value::Object(old)) = fs::read(&path).ok().and_then(|b| serde_json::from_slice(&b).ok()) {
            entries = old;
        }
    }
    entries.insert(record.command.clone(), serde_json::to_value(record).expect("record serializes"));
    write_json(&path, &Value::Object(entries))?;
    Ok(path)
}

/// `<file>.run.json` next to a single-file output.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".");
    name.push(RUN_FILE);
    out.with_file_name(name)
}

pub fn write_sidecar(out: &Path, record: &RunRecord) -> Result<PathBuf, Failure> {
    let path = sidecar_path(out);
    write_json(&path, &serde_json::to_value(record).expect("record serializes"))?;
    Ok(path)
}
