#![no_main]

use std::sync::OnceLock;

use hierseed::corpus_io::parse_assignments;
use hierseed::Taxonomy;
use libfuzzer_sys::fuzz_target;

const TAXONOMY: &str = r#"{"pivot":1,"nodes":[
  {"id":"root","parent":null},
  {"id":"a","parent":"root"},{"id":"a.0","parent":"a"},{"id":"a.1","parent":"a"},
  {"id":"b","parent":"root"},{"id":"b.0","parent":"b"}]}"#;

fn taxonomy() -> &'static Taxonomy {
    static T: OnceLock<Taxonomy> = OnceLock::new();
    T.get_or_init(|| Taxonomy::parse(TAXONOMY).expect("fixture").with_all_others())
}

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_assignments(text, taxonomy());
    }
});
