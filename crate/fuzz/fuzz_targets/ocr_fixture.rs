#![no_main]
use condgan::dataset::FixtureDetector;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = FixtureDetector::from_json(data);
});
