#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(case) = acfdi::NetworkCase::from_json(text) {
        let _ = acfdi::Grid::new(case);
    }
});
