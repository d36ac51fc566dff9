#![no_main]

use libfuzzer_sys::fuzz_target;
use mobility_motifs::netbuild::{read_network, write_network};

fuzz_target!(|data: &[u8]| {
    for directed in [true, false] {
        let Ok(net) = read_network(data, directed) else {
            continue;
        };
        let mut buf = Vec::new();
        write_network(&mut buf, &net).unwrap();
        assert_eq!(read_network(buf.as_slice(), directed).unwrap(), net);
    }
});
