#![no_main]
use homenet::wire::{CommandPayload, Reading};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(c) = CommandPayload::decode(data) {
        assert_eq!(c.encode(), data);
    }
    if let Ok(r) = Reading::decode(data) {
        assert_eq!(r.encode(), data);
    }
});
