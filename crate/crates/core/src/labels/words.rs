use std::collections::{BTreeMap, HashMap};

use super::EmbeddingPoint;
use crate::dataset::DatasetManifest;
use crate::error::{invalid, Error, Result};

/// Word → vector lookup with a fixed dimension.
pub trait WordEmbedder {
    fn dim(&self) -> usize;
    fn lookup(&self, word: &str) -> Option<&[f64]>;
}

/// Embedding table read from `word<TAB>v1 v2 …` lines. Blank lines and lines
/// starting with `#` are ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableEmbedder {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl TableEmbedder {
    pub fn parse(text: &str) -> Result<Self> {
        let mut dim = 0;
        let mut vectors = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| invalid(format!("embedding table line {}: {msg}", lineno + 1));
            let (word, rest) = line.split_once('\t').ok_or_else(|| err("expected word<TAB>values"))?;
            if word.is_empty() {
                return Err(err("empty word"));
            }
            let vec = rest
                .split_whitespace()
                .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| err("values must be finite numbers"))?;
            if vec.is_empty() {
                return Err(err("no values"));
            }
            if dim == 0 {
                dim = vec.len();
            } else if vec.len() != dim {
                return Err(err(&format!("expected {dim} values, found {}", vec.len())));
            }
            vectors.insert(word.to_lowercase(), vec);
        }
        if vectors.is_empty() {
            return Err(invalid("embedding table is empty"));
        }
        Ok(Self { dim, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl WordEmbedder for TableEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn lookup(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(&word.to_lowercase()).map(Vec::as_slice)
    }
}

/// Componentwise mean of the vectors of every resolvable word.
///
/// Vectors are summed in sorted word order so the result is bit-identical
/// under any permutation of `words`.
pub fn word_label_midpoint(id: &str, words: &[String], embedder: &dyn WordEmbedder) -> Result<Vec<f64>> {
    let mut sorted: Vec<&String> = words.iter().collect();
    sorted.sort();
    let mut sum = vec![0.0; embedder.dim()];
    let mut count = 0usize;
    for w in sorted {
        if let Some(v) = embedder.lookup(w) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::NoResolvableWords { id: id.to_string(), words: words.to_vec() });
    }
    Ok(sum.into_iter().map(|s| s / count as f64).collect())
}

/// Parses the word-label fixture: a JSON object mapping keys to word lists.
pub fn parse_word_labels(bytes: &[u8]) -> Result<BTreeMap<String, Vec<String>>> {
    serde_json::from_slice(bytes).map_err(|e| Error::json("word labels", e))
}

/// One midpoint per kept record. Fixture keys may be ids, paths or file stems.
pub fn word_points(
    manifest: &DatasetManifest,
    word_labels: &BTreeMap<String, Vec<String>>,
    embedder: &dyn WordEmbedder,
) -> Result<Vec<EmbeddingPoint>> {
    let mut by_id: BTreeMap<&str, &Vec<String>> = BTreeMap::new();
    for (key, words) in word_labels {
        if let Some(id) = manifest.resolve_key(key) {
            by_id.insert(id, words);
        }
    }
    let mut missing = Vec::new();
    let mut points = Vec::new();
    for rec in manifest.kept() {
        match by_id.get(rec.id.as_str()) {
            Some(words) => points.push(EmbeddingPoint {
                id: rec.id.clone(),
                vector: word_label_midpoint(&rec.id, words, embedder)?,
            }),
            None => missing.push(rec.id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::CoverageGap { missing });
    }
    Ok(points)
}
