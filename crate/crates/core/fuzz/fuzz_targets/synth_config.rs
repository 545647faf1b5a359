#![no_main]

use hierseed::synth::SynthConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = serde_json::from_slice::<SynthConfig>(data) {
        let _ = cfg.validate();
    }
});
