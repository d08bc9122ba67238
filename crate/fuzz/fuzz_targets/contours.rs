#![no_main]
use cor_core::segmentation::{contour_area, external_contours, largest_contour};
use cor_core::RasterImage;
use libfuzzer_sys::fuzz_target;

// Byte 0 is the width, byte 1 the height; each following byte is one mask
// pixel (odd = foreground).
fuzz_target!(|data: &[u8]| {
    if data.len() < 2 {
        return;
    }
    let (w, h) = (data[0] as usize % 48 + 1, data[1] as usize % 48 + 1);
    let bits = &data[2..];
    let mask = RasterImage::from_fn_gray(w, h, |x, y| {
        let v = bits.get(y * w + x).copied().unwrap_or(0);
        if v & 1 == 1 { 255 } else { 0 }
    })
    .unwrap();
    let contours = external_contours(&mask);
    for c in &contours {
        assert!(!c.points.is_empty());
        for p in &c.points {
            assert_eq!(mask.get(p.x as usize, p.y as usize), 255);
        }
        assert!(contour_area(c) >= 0.0);
    }
    let any = (0..w * h).any(|i| mask.get(i % w, i / w) != 0);
    assert_eq!(largest_contour(&contours).is_ok(), any);
});
