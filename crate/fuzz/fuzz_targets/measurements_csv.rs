#![no_main]

use std::sync::OnceLock;

use acfdi::stateest::{measurements_to_csv, parse_csv_records, parse_measurements_csv};
use libfuzzer_sys::fuzz_target;

fn grid() -> &'static acfdi::Grid {
    static GRID: OnceLock<acfdi::Grid> = OnceLock::new();
    GRID.get_or_init(|| acfdi::cases::case39().expect("bundled case"))
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_csv_records(text);
    if let Ok(ms) = parse_measurements_csv(grid(), text) {
        let again = parse_measurements_csv(grid(), &measurements_to_csv(grid(), &ms)).expect("round trip");
        assert_eq!(again, ms);
    }
});
