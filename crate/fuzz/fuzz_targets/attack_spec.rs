#![no_main]

use kfca_core::AttackSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = text.parse::<AttackSpec>() {
        assert_eq!(spec.to_string().parse::<AttackSpec>().expect("display form parses"), spec);
    }
});
