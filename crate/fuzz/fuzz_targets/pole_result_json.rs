#![no_main]

use gde_core::bound_states::PoleResult;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = PoleResult::from_json(text);
});
