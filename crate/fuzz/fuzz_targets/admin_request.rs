#![no_main]
use homenet_monitor::AdminRequest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(req) = serde_json::from_slice::<AdminRequest>(data) {
        let line = serde_json::to_string(&req).unwrap();
        let back: AdminRequest = serde_json::from_str(&line).unwrap();
        assert_eq!(back, req);
    }
});
