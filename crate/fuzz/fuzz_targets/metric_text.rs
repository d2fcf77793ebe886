#![no_main]

use hyperflow::io::{parse_metric, write_metric};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = parse_metric(text) {
        // anything accepted must survive a round trip unchanged
        let again = parse_metric(&write_metric(&m)).expect("written metric parses");
        assert_eq!(again, m);
    }
});
