#![no_main]
use condgan::labels::parse_word_labels;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse_word_labels(data);
});
