#![no_main]

use libfuzzer_sys::fuzz_target;
use glref::domain::SampledField;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(field) = SampledField::parse_csv(text) {
            let (lo, hi) = field.bounds();
            assert!(lo[0] < hi[0] && lo[1] < hi[1]);
        }
    }
});
