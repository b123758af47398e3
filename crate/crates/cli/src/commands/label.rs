use std::collections::BTreeMap;

use condgan::labels::{
    label_dataset, parse_word_labels, EmbeddingSource, FeatureExtractor, TableEmbedder, ToyFeatureExtractor,
    WordEmbedder, CLUSTERS_FILE, KMEANS_MAX_ITER, KMEANS_TOL, LABELS_FILE,
};
use serde_json::json;

use super::{read_input, require_dataset};
use crate::record::{write_run_record, RunRecord};
use crate::{invalid, Failure, LabelArgs, Method};

pub fn run(a: &LabelArgs, argv: &[String]) -> Result<(), Failure> {
    require_dataset(&a.dataset, "--dataset")?;
    let toy = ToyFeatureExtractor::default();
    let word_labels: BTreeMap<String, Vec<String>>;
    let table: TableEmbedder;
    let vectors: BTreeMap<String, Vec<f64>>;
    let (source, embedder_id) = match a.method {
        Method::Words => {
            let words = a.words.as_ref().ok_or_else(|| invalid("--method words needs --words FILE ({id: [words]} JSON)"))?;
            let emb = a
                .embeddings
                .as_ref()
                .ok_or_else(|| invalid("--method words needs --embeddings FILE (word<TAB>vector table)"))?;
            word_labels = parse_word_labels(&read_input(words, "--words")?)?;
            let text = String::from_utf8(read_input(emb, "--embeddings")?)
                .map_err(|_| invalid(format!("--embeddings {}: not UTF-8", emb.display())))?;
            table = TableEmbedder::parse(&text)?;
            (EmbeddingSource::Words { labels: &word_labels, embedder: &table }, format!("word-table-{}d", table.dim()))
        }
        Method::Features => match &a.embeddings {
            Some(p) => {
                vectors = serde_json::from_slice(&read_input(p, "--embeddings")?)
                    .map_err(|e| invalid(format!("--embeddings {}: {e}", p.display())))?;
                (EmbeddingSource::Precomputed(&vectors), "precomputed".to_string())
            }
            None => (EmbeddingSource::Features(&toy), toy.name()),
        },
    };
    let out = label_dataset(&a.dataset, &source, a.k, a.seed)?;
    say!("{}", out.report.to_text().trim_end());
    say!(
        "wrote {LABELS_FILE} ({} rows) and {CLUSTERS_FILE} (K = {}, inertia {:.6})",
        out.dataset.labels.len(),
        out.assignment.k,
        out.assignment.inertia
    );
    let resolved = json!({
        "method": out.dataset.method,
        "embedder": embedder_id,
        "k": a.k,
        "seed": a.seed,
        "max_iter": KMEANS_MAX_ITER,
        "tol": KMEANS_TOL,
        "inertia": out.assignment.inertia,
        "sizes": out.report.sizes,
    });
    write_run_record(&a.dataset, &RunRecord::new("label", argv, a, resolved), false)?;
    Ok(())
}
