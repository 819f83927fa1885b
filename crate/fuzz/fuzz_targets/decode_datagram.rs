#![no_main]
use homenet::wire::{decode_datagram, encode_datagram};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Anything accepted must re-encode to the exact input.
    if let Ok(d) = decode_datagram(data) {
        assert_eq!(encode_datagram(&d).unwrap(), data);
    }
});
