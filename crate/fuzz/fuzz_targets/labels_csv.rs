#![no_main]
use condgan::labels::ConditionedDataset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = ConditionedDataset::parse_labels_csv(data);
});
