#![no_main]
use condgan::labels::ClusterFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(f) = ClusterFile::from_json(data) {
        assert_eq!(f.centroids.len(), f.k);
    }
});
