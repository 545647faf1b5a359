#![no_main]

use hierseed::corpus_io::{parse_pairs, write_pairs};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(pairs) = parse_pairs(data) {
        let text = write_pairs(None, &pairs);
        assert_eq!(parse_pairs(text.as_bytes()).expect("reparse"), pairs);
    }
});
