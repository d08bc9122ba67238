#![no_main]
use cor_core::config::{parse_cortex_rows, parse_roi_flag};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(r) = parse_roi_flag(s) {
        assert!(r.x0 < r.x1 && r.y0 < r.y1);
        let again = format!("{},{},{},{}", r.x0, r.x1, r.y0, r.y1);
        assert_eq!(parse_roi_flag(&again), Ok(r));
    }
    if let Ok([a, b]) = parse_cortex_rows(s) {
        assert_ne!(a, b);
        assert_eq!(parse_cortex_rows(&format!("{a},{b}")), Ok([a, b]));
    }
});
