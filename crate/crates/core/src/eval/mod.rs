//! FID, Inception Score, truncation and per-class diversity.

mod frechet;
mod inception;
mod report;
mod truncation;

pub use frechet::{compute_feature_stats, frechet_distance, matrix_sqrt_psd, FeatureStats};
pub use inception::{inception_score, CentroidClassifier, ProbMatrix};
pub use report::{
    eval_indices, evaluate_model, per_class_diversity, truncation_sweep, EvalOptions, EvalReport, EVAL_REPORT_FILE,
};
pub use truncation::{latent_center_of_mass, truncate_latent, ClassDraw, TruncationState};
