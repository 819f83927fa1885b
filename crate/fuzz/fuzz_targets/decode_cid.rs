#![no_main]
use homenet::wire::{decode_cid, encode_cid};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(e) = decode_cid(text) {
        let again = encode_cid(
            &e.account,
            &e.message_type,
            e.qualifier,
            e.event_code,
            e.partition,
            e.zone,
        )
        .unwrap();
        assert_eq!(again, text);
    }
});
