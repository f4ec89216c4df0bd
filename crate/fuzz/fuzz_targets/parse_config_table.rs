#![no_main]

use libfuzzer_sys::fuzz_target;
use qthermo::scenarios::ScenarioConfig;

// Raw deserialisation and resolution as separate steps.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = ScenarioConfig::from_toml_str(text) {
            let _ = cfg.resolve();
        }
    }
});
