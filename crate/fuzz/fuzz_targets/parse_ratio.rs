#![no_main]

use libfuzzer_sys::fuzz_target;
use viewagg::{MissingViewPolicy, PpRatio};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(ratio) = text.parse::<PpRatio>() {
        // accepted ratios never carry an all-zero weight pair
        let config = ratio.to_config(MissingViewPolicy::UsePresentView);
        assert!(config.w_f() + config.w_l() > 0.0);
    }
    let _ = viewagg::ratio::parse_ratio_list(text);
});
