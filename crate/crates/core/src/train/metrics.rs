//! `metrics.csv`: one row per logged step, appended as training runs.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const METRICS_FILE: &str = "metrics.csv";
pub const METRICS_HEADER: &str = "step,images_seen,phase,alpha,d_loss,g_loss,gp";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: u64,
    pub images_seen: u64,
    pub phase: usize,
    pub alpha: f64,
    pub d_loss: f64,
    pub g_loss: f64,
    pub gp: f64,
}

impl MetricsRow {
    fn line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.step, self.images_seen, self.phase, self.alpha, self.d_loss, self.g_loss, self.gp
        )
    }
}

pub struct MetricsLog {
    path: PathBuf,
}

impl MetricsLog {
    /// Starts a fresh log, replacing any existing file.
    pub fn create(dir: &Path) -> Result<Self> {
        let path = dir.join(METRICS_FILE);
        fs::write(&path, format!("{METRICS_HEADER}\n")).map_err(|e| Error::io(&path, e))?;
        Ok(Self { path })
    }

    /// Reopens a log for a resumed run, dropping rows after `step`.
    pub fn resume(dir: &Path, step: u64) -> Result<Self> {
        let path = dir.join(METRICS_FILE);
        if !path.exists() {
            return Self::create(dir);
        }
        let rows: Vec<MetricsRow> = read_metrics(&path)?.into_iter().filter(|r| r.step <= step).collect();
        let mut text = format!("{METRICS_HEADER}\n");
        for r in rows {
            text.push_str(&r.line());
            text.push('\n');
        }
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(Self { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, row: &MetricsRow) -> Result<()> {
        let mut f = OpenOptions::new().append(true).open(&self.path).map_err(|e| Error::io(&self.path, e))?;
        writeln!(f, "{}", row.line()).map_err(|e| Error::io(&self.path, e))
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    let header: Vec<String> = reader.headers().map_err(|e| invalid(format!("{}: {e}", path.display())))?.iter().map(String::from).collect();
    if header.join(",") != METRICS_HEADER {
        return Err(invalid(format!("{}: unexpected header {}", path.display(), header.join(","))));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e| invalid(format!("{}: {e}", path.display()))))
        .collect()
}
