#![no_main]

use libfuzzer_sys::fuzz_target;
use mobility_motifs::station::{parse_stations, write_stations};

fuzz_target!(|data: &[u8]| {
    let Ok(universe) = parse_stations(data) else {
        return;
    };
    let mut buf = Vec::new();
    write_stations(&mut buf, &universe).unwrap();
    let again = parse_stations(buf.as_slice()).unwrap();
    assert_eq!(again.truth(), universe.truth());
    assert_eq!(again.len(), universe.len());
});
