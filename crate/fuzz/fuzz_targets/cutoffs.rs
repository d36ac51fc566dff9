#![no_main]

use libfuzzer_sys::fuzz_target;
use mobility_motifs::eval::parse_cutoffs;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cutoffs) = parse_cutoffs(text) {
        let joined: Vec<String> = cutoffs.iter().map(|c| c.to_string()).collect();
        assert_eq!(parse_cutoffs(&joined.join(",")).unwrap(), cutoffs);
    }
});
