#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(case) = acfdi::netmodel::parse_case(text) {
        let back = acfdi::NetworkCase::from_json(&case.to_json()).expect("serialized case parses");
        assert_eq!(back, case);
        let _ = acfdi::Grid::new(case);
    }
});
