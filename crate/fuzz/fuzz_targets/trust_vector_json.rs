#![no_main]

use libfuzzer_sys::fuzz_target;
use maddm::TrustVector;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(v) = TrustVector::from_json(text) {
        assert!(v.records().iter().all(|r| r.is_valid()));
        let back = TrustVector::from_json(&v.to_json()).expect("round trip");
        assert_eq!(back, v);
    }
});
