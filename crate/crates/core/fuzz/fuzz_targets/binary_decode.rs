#![no_main]

use hierseed::corpus_io::{decode_binary, encode_binary};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(c) = decode_binary(data) {
        let bytes = encode_binary(&c).expect("encode");
        let back = decode_binary(&bytes).expect("decode own output");
        assert_eq!(back.len(), c.len());
        assert_eq!(back.dim(), c.dim());
    }
});
