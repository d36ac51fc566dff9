#![no_main]

use libfuzzer_sys::fuzz_target;
use mobility_motifs::ingest::{parse_records, partition_by_day, write_records, IngestConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(parsed) = parse_records(data, &IngestConfig::default()) else {
        return;
    };
    let days = partition_by_day(&parsed.records);
    assert_eq!(days.iter().map(|d| d.trips.len()).sum::<usize>(), parsed.records.len());

    // Accepted rows survive a write/read cycle unchanged.
    let mut buf = Vec::new();
    write_records(&mut buf, &parsed.records).unwrap();
    let again = parse_records(buf.as_slice(), &IngestConfig::default()).unwrap();
    assert!(again.rejects.is_empty());
    assert_eq!(again.records, parsed.records);
});
