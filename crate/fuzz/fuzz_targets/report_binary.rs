#![no_main]

use kfca_core::ReportMatrix;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = ReportMatrix::from_binary(data) {
        let bytes = m.to_binary().expect("decoded matrix encodes");
        assert_eq!(ReportMatrix::from_binary(&bytes).expect("own bytes decode"), m);
    }
    let _ = ReportMatrix::decode(data, None);
});
