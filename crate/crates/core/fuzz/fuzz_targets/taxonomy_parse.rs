#![no_main]

use hierseed::Taxonomy;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(t) = Taxonomy::parse(text) {
        // whatever parses must survive its own file form
        let again = Taxonomy::from_file(&t.to_file(), None).expect("reparse");
        assert_eq!(again.len(), t.len());
        let _ = t.with_all_others();
    }
});
