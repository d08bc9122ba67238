#![no_main]
use cor_core::config::{apply_ini, validate};
use cor_core::PipelineConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let base = PipelineConfig::default();
    if let Ok(cfg) = apply_ini(&base, text) {
        let _ = validate(&cfg);
        // Applying the same text twice is idempotent.
        assert_eq!(apply_ini(&cfg, text).ok(), Some(cfg));
    }
});
