#![no_main]
use condgan::train::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(c) = ExperimentConfig::from_json(text) {
            let _ = c.validate();
        }
    }
});
