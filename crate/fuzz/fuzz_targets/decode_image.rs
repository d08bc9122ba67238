#![no_main]
use cor_core::io::decode_image;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = decode_image(data) {
        assert_eq!(img.channels(), 3);
        assert_eq!(img.pixels().len(), img.width() * img.height() * 3);
    }
});
