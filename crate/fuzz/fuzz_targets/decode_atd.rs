#![no_main]

use atd_core::tensor::{decode_atd, encode_atd};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = decode_atd(data) {
        // anything accepted must re-encode to the same bytes
        assert_eq!(encode_atd(&t), data);
    }
});
