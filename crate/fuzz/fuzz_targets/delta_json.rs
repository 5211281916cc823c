#![no_main]

use kfca_core::delta::check_categorical;
use kfca_core::DeltaMatrix;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(delta) = serde_json::from_slice::<DeltaMatrix>(data) {
        let _ = check_categorical(&delta);
        let text = serde_json::to_string(&delta).expect("delta serializes");
        assert_eq!(serde_json::from_str::<DeltaMatrix>(&text).expect("own JSON parses"), delta);
    }
});
