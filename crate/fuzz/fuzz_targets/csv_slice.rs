#![no_main]

use atd_core::tensor::parse_csv_slice;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok((rows, cols, values)) = parse_csv_slice(&text, "fuzz.csv") {
        assert!(rows > 0 && cols > 0);
        assert_eq!(values.len(), rows * cols);
    }
});
