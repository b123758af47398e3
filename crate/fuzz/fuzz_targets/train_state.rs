#![no_main]
use condgan::train::TrainState;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = serde_json::from_slice::<TrainState>(data) {
        let _ = s.config.validate();
    }
});
