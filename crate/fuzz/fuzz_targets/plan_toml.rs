#![no_main]

use libfuzzer_sys::fuzz_target;
use maddm::ExperimentPlan;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(plan) = ExperimentPlan::from_toml(text) {
        // Cell enumeration and seeding must not panic on any accepted plan.
        let _ = plan.fingerprint();
        let back = ExperimentPlan::from_toml(&plan.to_toml()).expect("round trip");
        assert_eq!(back.fingerprint(), plan.fingerprint());
    }
});
