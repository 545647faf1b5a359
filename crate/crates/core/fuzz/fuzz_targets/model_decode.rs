#![no_main]

use hierseed::model::{decode, encode};
use libfuzzer_sys::fuzz_target;

// input: manifest text, a NUL byte, then reps.bin bytes
fuzz_target!(|data: &[u8]| {
    let Some(split) = data.iter().position(|&b| b == 0) else {
        return;
    };
    let Ok(manifest) = std::str::from_utf8(&data[..split]) else {
        return;
    };
    if let Ok(model) = decode(manifest, &data[split + 1..]) {
        let _ = model.infer_one(&vec![0.0; model.dim().unwrap_or(0)]);
        let _ = encode(&model);
    }
});
