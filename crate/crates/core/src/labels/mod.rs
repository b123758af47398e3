//! Synthetic class-conditions: embed each logo (word-vector midpoint of its
//! detected object words, or image features), then partition with K-means.

mod conditions;
mod features;
mod kmeans;
mod pipeline;
mod report;
mod words;

pub use conditions::{
    assign_conditions, ClusterFile, ConditionedDataset, LabelMethod, CLUSTERS_FILE, LABELS_FILE,
};
pub use features::{extract_cnn_features, FeatureExtractor, ToyFeatureExtractor, FEATURE_DIM};
pub use kmeans::{kmeans_cluster, kmeans_cluster_traced, sq_dist, ClusterAssignment, DEFAULT_K};
pub use pipeline::{
    dataset_features, embed_dataset, label_dataset, EmbeddingSource, LabelOutcome, KMEANS_MAX_ITER, KMEANS_TOL,
};
pub use report::{cluster_report, ClusterReport, MarginStats};
pub use words::{parse_word_labels, word_label_midpoint, word_points, TableEmbedder, WordEmbedder};

use serde::{Deserialize, Serialize};

/// One record projected into a D-dimensional space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingPoint {
    pub id: String,
    pub vector: Vec<f64>,
}
