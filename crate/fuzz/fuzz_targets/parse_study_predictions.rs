#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((classes, rows)) = viewagg::ingest::parse_study_predictions(data) {
        let mut buf = Vec::new();
        viewagg::ingest::write_study_predictions_to(&mut buf, &classes, &rows).unwrap();
        let (classes2, rows2) = viewagg::ingest::parse_study_predictions(&buf[..]).unwrap();
        assert_eq!(classes, classes2);
        assert_eq!(rows, rows2);
    }
});
