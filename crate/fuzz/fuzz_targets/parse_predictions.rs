#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(set) = viewagg::ingest::parse_predictions(data) {
        // anything accepted must survive a write/read round trip unchanged
        let mut buf = Vec::new();
        viewagg::ingest::write_predictions_to(&mut buf, &set).unwrap();
        assert_eq!(viewagg::ingest::parse_predictions(&buf[..]).unwrap(), set);
        for group in viewagg::group_by_study(set.records()) {
            let _ = viewagg::aggregate_study(&group, &Default::default());
        }
    }
});
