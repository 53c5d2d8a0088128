//! Deserialization must reject malformed solution files through the shape
//! checks, never by panicking.

#![no_main]

use gde_core::energy::TSolution;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = TSolution::from_json(text);
});
