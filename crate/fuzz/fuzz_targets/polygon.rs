#![no_main]

use libfuzzer_sys::fuzz_target;
use glref::domain::Omega;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(omega) = Omega::parse_polygon(text) {
            assert!(omega.area() > 0.0);
            let (lo, hi) = omega.bounding_box();
            let c = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
            let _ = omega.signed_distance(c);
        }
    }
});
