#![no_main]

use kfca_core::sim::SimConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = SimConfig::from_ini(text) {
        assert_eq!(SimConfig::from_ini(&cfg.to_ini()).expect("canonical form parses"), cfg);
    }
});
