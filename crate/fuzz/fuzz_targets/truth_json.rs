#![no_main]
use cor_core::phantom::PhantomTruth;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = serde_json::from_slice::<PhantomTruth>(data) {
        let text = serde_json::to_string(&t).unwrap();
        let back: PhantomTruth = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
});
