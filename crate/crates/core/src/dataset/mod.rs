//! Image corpus preparation: ingestion, text-logo filtering, the resolution
//! pyramid used by progressive training, and batch sampling.
//!
//! On disk a dataset is a directory holding `manifest.json` plus one PNG per
//! kept record and resolution at `r<N>/<id>.png`.

mod ingest;
mod manifest;
mod ocr;
mod prepare;
mod pyramid;
mod shapes;
mod store;

pub use ingest::{ingest_images, IngestOptions, IngestOutcome, SkippedFile};
pub use manifest::{DatasetManifest, ImageRecord, ImageSource, RecordEntry, MANIFEST_FILE, MANIFEST_VERSION};
pub use ocr::{
    count_alphanumeric, filter_text_logos, CommandDetector, DetectorError, FilterStats, FixtureDetector,
    TextDetector, DEFAULT_MIN_CHARS,
};
pub use prepare::{prepare_dataset, PrepareOptions, PrepareOutcome, TextFilter};
pub use pyramid::{box_downsample, build_multiresolution, pyramid_resolutions};
pub use shapes::{generate_shapes, shape_labels, ShapeClass, ShapeKind, SyntheticImage};
pub use store::{one_hot, Batch, DatasetStore};

use std::path::{Path, PathBuf};

/// Location of one record's image at one resolution, relative to the store root.
pub fn image_path(root: &Path, resolution: u32, id: &str) -> PathBuf {
    root.join(format!("r{resolution}")).join(format!("{id}.png"))
}
