#![no_main]
use cor_core::records::{pair_ratios, read_truth};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(truth) = read_truth(data) {
        for (_, (acor, pcor)) in &truth {
            assert!(acor.is_finite() && pcor.is_finite());
        }
        let _ = pair_ratios(&[], &truth);
    }
});
