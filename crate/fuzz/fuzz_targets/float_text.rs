#![no_main]
use libfuzzer_sys::fuzz_target;
use topogap::format::{float, parse_float};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Some(x) = parse_float(s) {
            if !x.is_nan() {
                assert_eq!(parse_float(&float(x)).unwrap().to_bits(), x.to_bits());
            }
        }
    }
    if data.len() >= 8 {
        let x = f64::from_le_bytes(data[..8].try_into().unwrap());
        if !x.is_nan() {
            assert_eq!(parse_float(&float(x)).unwrap().to_bits(), x.to_bits());
        }
    }
});
