#![no_main]

use libfuzzer_sys::fuzz_target;
use uav_immune::immune::binary::{parse_bits, universe, Pattern};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = text.parse::<Pattern>() {
        assert_eq!(p.to_string(), text);
        if p.len() <= 12 {
            for s in universe(p.len()) {
                let _ = p.matches(&s);
            }
        }
    }
    if let Some(bits) = parse_bits(text) {
        assert_eq!(bits.len(), text.len());
    }
});
