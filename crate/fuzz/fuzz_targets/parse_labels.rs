#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(labels) = viewagg::ingest::parse_labels(data) {
        let mut buf = Vec::new();
        viewagg::ingest::write_labels_to(&mut buf, &labels).unwrap();
        assert_eq!(viewagg::ingest::parse_labels(&buf[..]).unwrap(), labels);
    }
});
