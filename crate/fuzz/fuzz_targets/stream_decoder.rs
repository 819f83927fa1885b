#![no_main]
use homenet::wire::{Datagram, StreamDecoder};
use libfuzzer_sys::fuzz_target;

fn drain(decoder: &mut StreamDecoder, out: &mut Vec<Datagram>) -> bool {
    loop {
        match decoder.next_frame() {
            Ok(Some(d)) => out.push(d),
            Ok(None) => return true,
            Err(_) => return false,
        }
    }
}

fuzz_target!(|data: &[u8]| {
    let Some((&split, rest)) = data.split_first() else {
        return;
    };
    // Chunk boundaries must not change what a clean stream decodes to.
    let cut = usize::from(split) % (rest.len() + 1);
    let mut whole = StreamDecoder::new();
    whole.push(rest);
    let mut single = Vec::new();
    let single_ok = drain(&mut whole, &mut single);

    let mut parts = StreamDecoder::new();
    let mut chunked = Vec::new();
    parts.push(&rest[..cut]);
    let mut chunked_ok = drain(&mut parts, &mut chunked);
    if chunked_ok {
        parts.push(&rest[cut..]);
        chunked_ok = drain(&mut parts, &mut chunked);
    }
    if single_ok && chunked_ok {
        assert_eq!(chunked, single);
        assert_eq!(parts.pending(), whole.pending());
    }
});
