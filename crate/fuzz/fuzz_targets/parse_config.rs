#![no_main]

use libfuzzer_sys::fuzz_target;
use qthermo::scenarios::Scenario;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(s) = Scenario::parse(text) {
            let _ = s.time_grid();
            if let Some(axis) = &s.sweep {
                assert_eq!(axis.values().len(), axis.n);
            }
        }
    }
});
