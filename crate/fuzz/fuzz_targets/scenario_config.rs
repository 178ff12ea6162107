#![no_main]

use acfdi_cli::ScenarioConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ScenarioConfig::from_json(text) {
        let again = ScenarioConfig::from_json(&cfg.to_json()).expect("round trip");
        assert_eq!(again.to_json(), cfg.to_json());
    }
});
