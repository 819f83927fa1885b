#![no_main]
use homenet::Topology;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(t) = Topology::from_json(text) {
            assert!(t.table().contains(t.coordinator()));
        }
    }
});
