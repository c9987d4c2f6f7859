#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(map) = glref::io::parse_key_values(text) {
            for (k, v) in &map {
                assert!(!k.is_empty());
                assert_eq!(v.trim(), v);
            }
        }
    }
});
