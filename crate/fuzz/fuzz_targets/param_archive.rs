#![no_main]
use condgan::model::ParamArchive;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(a) = ParamArchive::decode(data) {
        let again = ParamArchive::decode(&a.encode()).expect("re-encoded archive decodes");
        assert_eq!(a.encode(), again.encode());
    }
});
