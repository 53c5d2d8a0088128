//! Config parsing plus validation for every scenario: neither may panic,
//! whatever the bytes.

#![no_main]

use gde_lab::config::{Scenario, ScenarioConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = ScenarioConfig::from_toml(text) else {
        return;
    };
    for scenario in Scenario::ALL {
        let _ = cfg.validate(scenario);
    }
});
