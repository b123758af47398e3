//! Prepare end to end: ingestion, text filtering, pyramid and batches.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use condgan::dataset::{
    filter_text_logos, generate_shapes, image_path, prepare_dataset, DatasetStore, FixtureDetector, IngestOptions,
    PrepareOptions, ShapeClass, TextFilter, MANIFEST_FILE,
};
use image::{Rgb, RgbImage};

fn options(filter: TextFilter<'_>) -> PrepareOptions<'_> {
    PrepareOptions { ingest: IngestOptions::new(16, 0), filter, min_chars: 2, force: false }
}

fn shapes(dir: &Path, per_class: usize) {
    generate_shapes(dir, &[ShapeClass::red_circle(), ShapeClass::blue_square()], per_class, 32, 7).unwrap();
}

#[test]
fn corrupt_file_is_skipped() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    shapes(&src, 1);
    fs::write(src.join("broken.png"), b"\x89PNG\r\n\x1a\nnot really").unwrap();
    let out = prepare_dataset(&src, &tmp.path().join("ds"), &options(TextFilter::Off)).unwrap();
    assert_eq!(out.manifest.kept_count(), 2);
    assert_eq!(out.skipped.len(), 1);
    assert!(out.skipped[0].path.ends_with("broken.png"));
}

#[test]
fn ocr_fixture_drops_exactly_the_text_images() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    shapes(&src, 5);
    // one hit below the character threshold, one of pure punctuation
    let texts: BTreeMap<String, String> = [
        ("red_circle_0000", "ACME"),
        ("red_circle_0003", "Co 42"),
        ("blue_square_0001.png", "ZZ"),
        ("blue_square_0004", "hello world"),
        ("red_circle_0001", "A"),
        ("blue_square_0002", "!!--"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    let out =
        prepare_dataset(&src, &tmp.path().join("ds"), &options(TextFilter::Fixture(FixtureDetector::new(texts)))).unwrap();
    let dropped: Vec<&str> =
        out.manifest.records.iter().filter(|r| r.drop_reason.as_deref() == Some("text")).map(|r| r.path.as_str()).collect();
    assert_eq!(dropped.len(), 4, "{dropped:?}");
    assert_eq!(out.manifest.kept_count(), 6);
    for r in out.manifest.kept() {
        for res in [4, 8, 16] {
            assert!(image_path(&tmp.path().join("ds"), res, &r.id).is_file());
        }
    }
}

#[test]
fn rerun_gives_identical_manifest_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    shapes(&src, 4);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    prepare_dataset(&src, &a, &options(TextFilter::Off)).unwrap();
    prepare_dataset(&src, &b, &options(TextFilter::Off)).unwrap();
    assert_eq!(fs::read(a.join(MANIFEST_FILE)).unwrap(), fs::read(b.join(MANIFEST_FILE)).unwrap());
    let ids: Vec<String> = DatasetStore::open(&a).unwrap().kept_ids().to_vec();
    for id in ids {
        assert_eq!(fs::read(image_path(&a, 8, &id)).unwrap(), fs::read(image_path(&b, 8, &id)).unwrap());
    }
}

#[test]
fn text_filter_is_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    shapes(&src, 3);
    let ds = tmp.path().join("ds");
    let texts: BTreeMap<String, String> =
        [("red_circle_0002".to_string(), "LOGO".to_string())].into_iter().collect();
    let detector = FixtureDetector::new(texts);
    let out = prepare_dataset(&src, &ds, &options(TextFilter::Fixture(detector.clone()))).unwrap();
    let resolved = detector.resolve(&out.manifest);
    let (once, _) = filter_text_logos(&out.manifest, &ds, &resolved, 2).unwrap();
    let (twice, stats) = filter_text_logos(&once, &ds, &resolved, 2).unwrap();
    assert_eq!(once, out.manifest);
    assert_eq!(twice, once);
    assert_eq!(stats.dropped, 0);
}

#[test]
fn batches_are_deterministic_and_scaled() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    fs::create_dir_all(&src).unwrap();
    RgbImage::from_pixel(20, 20, Rgb([0, 0, 0])).save(src.join("black.png")).unwrap();
    RgbImage::from_pixel(20, 20, Rgb([255, 255, 255])).save(src.join("white.png")).unwrap();
    let ds = tmp.path().join("ds");
    prepare_dataset(&src, &ds, &options(TextFilter::Off)).unwrap();
    let store = DatasetStore::open(&ds).unwrap();
    let a = store.load_batch(None, 8, 6, 3).unwrap();
    let b = DatasetStore::open(&ds).unwrap().load_batch(None, 8, 6, 3).unwrap();
    assert_eq!(a.ids, b.ids);
    assert_eq!(a.images.data(), b.images.data());
    assert_eq!(a.images.shape(), &[6, 3, 8, 8]);
    assert_eq!(a.conditions.shape(), &[6, 0]);
    for (i, id) in a.ids.iter().enumerate() {
        let want = if store.manifest().record(id).unwrap().path == "black.png" { -1.0 } else { 1.0 };
        assert!(a.images.data()[i * 192..(i + 1) * 192].iter().all(|&v| v == want), "{id}");
    }
}
