#![no_main]

use libfuzzer_sys::fuzz_target;
use maddm::harness::{build_report, read_results};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_results(data) {
        if let Ok(report) = build_report(&rows) {
            assert!(report
                .significance
                .iter()
                .all(|s| (0.0..=1.0).contains(&s.p_value)));
        }
    }
});
