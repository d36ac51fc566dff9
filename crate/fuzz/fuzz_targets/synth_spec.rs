#![no_main]

use libfuzzer_sys::fuzz_target;
use mobility_motifs::synthgen::parse_synth_spec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(spec) = parse_synth_spec(text) else {
        return;
    };
    // Generation itself is not fuzzed; resolving is bounded by station count.
    if spec.station_count <= 10_000 {
        let _ = spec.resolve();
    }
});
