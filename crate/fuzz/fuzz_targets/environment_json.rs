#![no_main]

use libfuzzer_sys::fuzz_target;
use maddm::Environment;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(env) = Environment::from_json(text) {
        let back = Environment::from_json(&env.to_json()).expect("round trip");
        assert_eq!(back.digest(), env.digest());
    }
});
