//! Progressive training: phase schedule, the alternating WGAN-GP loop,
//! checkpoints, metrics and sample grids.

mod checkpoint;
mod config;
mod grid;
mod metrics;
mod schedule;
mod trainer;

pub use checkpoint::{
    checkpoint_dir, load_checkpoint, load_state, save_checkpoint, Checkpoint, TrainState, CHECKPOINT_DIR, STATE_FILE,
};
pub use config::{ExperimentConfig, TrainConfig};
pub use grid::{grid_file_name, render_grid, snapshot_grid};
pub use metrics::{read_metrics, MetricsLog, MetricsRow, METRICS_FILE, METRICS_HEADER};
pub use schedule::schedule_phase;
pub use trainer::{TrainOutcome, Trainer, GRID_DIR};
