#![no_main]

use libfuzzer_sys::fuzz_target;
use mobility_motifs::eval::{parse_ranking, write_ranking};

fuzz_target!(|data: &[u8]| {
    let Ok(table) = parse_ranking(data, "fuzz") else {
        return;
    };
    for (k, e) in table.entries.iter().enumerate() {
        assert_eq!(e.rank, k + 1);
    }
    let mut buf = Vec::new();
    write_ranking(&mut buf, &table).unwrap();
    assert_eq!(parse_ranking(buf.as_slice(), "fuzz").unwrap(), table);
});
