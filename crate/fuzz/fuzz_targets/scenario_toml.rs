#![no_main]

use libfuzzer_sys::fuzz_target;
use uav_immune::harness::ScenarioConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ScenarioConfig::from_toml(text) {
        // an accepted scenario must expand and survive re-serialization
        let cells = cfg.cells().expect("validated scenario expands");
        for c in &cells {
            cfg.world_params(c).validate().expect("validated cell builds");
        }
        let again = ScenarioConfig::from_toml(&cfg.to_toml()).expect("round trip");
        assert_eq!(again.cells().unwrap().len(), cells.len());
    }
});
