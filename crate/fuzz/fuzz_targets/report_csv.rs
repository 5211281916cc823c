#![no_main]

use kfca_core::ReportMatrix;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = ReportMatrix::from_csv(text, None) {
        let again = ReportMatrix::from_csv(&m.to_csv(), Some(m.labels())).expect("own CSV parses");
        assert_eq!(again.rows().collect::<Vec<_>>(), m.rows().collect::<Vec<_>>());
    }
});
