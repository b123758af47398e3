use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ClusterAssignment;
use crate::dataset::DatasetManifest;
use crate::error::{invalid, Error, Result};

pub const LABELS_FILE: &str = "labels.csv";
pub const CLUSTERS_FILE: &str = "clusters.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMethod {
    WordMidpoint,
    CnnEmbedding,
    External,
}

/// Kept records joined with their class-condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionedDataset {
    pub k: usize,
    pub method: LabelMethod,
    pub labels: BTreeMap<String, usize>,
}

/// Contents of `clusters.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterFile {
    pub k: usize,
    pub seed: u64,
    pub inertia: f64,
    pub method: LabelMethod,
    pub centroids: Vec<Vec<f64>>,
}

impl ClusterFile {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let f: Self = serde_json::from_slice(bytes).map_err(|e| Error::json(CLUSTERS_FILE, e))?;
        if f.k == 0 || f.centroids.len() != f.k {
            return Err(invalid(format!("{CLUSTERS_FILE}: k = {} but {} centroids", f.k, f.centroids.len())));
        }
        Ok(f)
    }
}

/// Restricts the assignment to the manifest's kept records; every kept
/// record must have a label.
pub fn assign_conditions(
    manifest: &DatasetManifest,
    assignment: &ClusterAssignment,
    method: LabelMethod,
) -> Result<ConditionedDataset> {
    let mut labels = BTreeMap::new();
    let mut missing = Vec::new();
    for rec in manifest.kept() {
        match assignment.labels.get(&rec.id) {
            Some(&c) if c < assignment.k => {
                labels.insert(rec.id.clone(), c);
            }
            Some(&c) => return Err(invalid(format!("record {} has cluster {c} ≥ K = {}", rec.id, assignment.k))),
            None => missing.push(rec.id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::CoverageGap { missing });
    }
    Ok(ConditionedDataset { k: assignment.k, method, labels })
}

impl ConditionedDataset {
    /// Parses `labels.csv` (header `id,cluster`).
    pub fn parse_labels_csv(bytes: &[u8]) -> Result<BTreeMap<String, usize>> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
        let headers = reader.headers().map_err(|e| invalid(format!("{LABELS_FILE}: {e}")))?;
        if headers.iter().collect::<Vec<_>>() != ["id", "cluster"] {
            return Err(invalid(format!("{LABELS_FILE}: header must be `id,cluster`")));
        }
        let mut labels = BTreeMap::new();
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|e| invalid(format!("{LABELS_FILE}: {e}")))?;
            let bad = || invalid(format!("{LABELS_FILE} row {}: expected `id,cluster`", i + 2));
            if row.len() != 2 {
                return Err(bad());
            }
            let id = row[0].to_string();
            let cluster: usize = row[1].trim().parse().map_err(|_| bad())?;
            if id.is_empty() || labels.insert(id.clone(), cluster).is_some() {
                return Err(invalid(format!("{LABELS_FILE}: empty or duplicate id {id:?}")));
            }
        }
        Ok(labels)
    }

    pub fn labels_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "cluster"]).expect("in-memory write");
        for (id, c) in &self.labels {
            w.write_record([id.as_str(), &c.to_string()]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 ids")
    }

    /// Writes `labels.csv`, plus `clusters.json` when an assignment is given.
    pub fn save(&self, root: &Path, assignment: Option<&ClusterAssignment>) -> Result<()> {
        let path = root.join(LABELS_FILE);
        fs::write(&path, self.labels_csv()).map_err(|e| Error::io(&path, e))?;
        if let Some(a) = assignment {
            let file = ClusterFile { k: a.k, seed: a.seed, inertia: a.inertia, method: self.method, centroids: a.centroids.clone() };
            let path = root.join(CLUSTERS_FILE);
            let mut text = serde_json::to_string_pretty(&file).expect("clusters serialize");
            text.push('\n');
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    /// Reads labels from `root`. Without `clusters.json` the labels are
    /// treated as external and K is one past the largest cluster index.
    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(LABELS_FILE);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let labels = Self::parse_labels_csv(&bytes)?;
        let cpath = root.join(CLUSTERS_FILE);
        let (k, method) = if cpath.is_file() {
            let bytes = fs::read(&cpath).map_err(|e| Error::io(&cpath, e))?;
            let f = ClusterFile::from_json(&bytes)?;
            (f.k, f.method)
        } else {
            (labels.values().max().map_or(0, |m| m + 1), LabelMethod::External)
        };
        if let Some((id, c)) = labels.iter().find(|(_, &c)| c >= k) {
            return Err(invalid(format!("{LABELS_FILE}: {id} has cluster {c} ≥ K = {k}")));
        }
        if k == 0 {
            return Err(invalid(format!("{LABELS_FILE} has no rows")));
        }
        Ok(Self { k, method, labels })
    }

    /// Checks that every kept record has a label.
    pub fn check_coverage(&self, manifest: &DatasetManifest) -> Result<()> {
        let missing: Vec<String> = manifest.kept().filter(|r| !self.labels.contains_key(&r.id)).map(|r| r.id.clone()).collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::CoverageGap { missing })
        }
    }

    /// Fraction of kept records in each class.
    pub fn class_frequencies(&self) -> Vec<f64> {
        let mut counts = vec![0.0; self.k];
        for &c in self.labels.values() {
            counts[c] += 1.0;
        }
        let n = self.labels.len().max(1) as f64;
        counts.into_iter().map(|c| c / n).collect()
    }
}
