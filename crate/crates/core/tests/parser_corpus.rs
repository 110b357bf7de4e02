//! Replays the fuzz corpus through every parser entry point, plus random
//! truncations and byte flips of each seed. Parsers may reject input but must
//! never panic, and accepted input must round-trip.

use std::fs;
use std::path::PathBuf;

use maddm::harness::{build_report, read_results};
use maddm::{Environment, ExperimentPlan, TrustVector};
use proptest::prelude::*;

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<Vec<u8>> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| fs::read(e.unwrap().path()).unwrap())
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn trust_vector(data: &[u8]) -> bool {
    let Ok(text) = std::str::from_utf8(data) else {
        return false;
    };
    match TrustVector::from_json(text) {
        Ok(v) => {
            assert!(v.records().iter().all(|r| r.is_valid()));
            assert_eq!(TrustVector::from_json(&v.to_json()).unwrap(), v);
            true
        }
        Err(_) => false,
    }
}

fn environment(data: &[u8]) -> bool {
    let Ok(text) = std::str::from_utf8(data) else {
        return false;
    };
    match Environment::from_json(text) {
        Ok(env) => {
            assert_eq!(
                Environment::from_json(&env.to_json()).unwrap().digest(),
                env.digest()
            );
            true
        }
        Err(_) => false,
    }
}

fn plan(data: &[u8]) -> bool {
    let Ok(text) = std::str::from_utf8(data) else {
        return false;
    };
    match ExperimentPlan::from_toml(text) {
        Ok(p) => {
            assert_eq!(ExperimentPlan::from_toml(&p.to_toml()).unwrap(), p);
            true
        }
        Err(_) => false,
    }
}

fn results(data: &[u8]) -> bool {
    match read_results(data) {
        Ok(rows) => {
            if let Ok(report) = build_report(&rows) {
                assert!(report
                    .significance
                    .iter()
                    .all(|s| (0.0..=1.0).contains(&s.p_value)));
            }
            true
        }
        Err(_) => false,
    }
}

type Target = (&'static str, fn(&[u8]) -> bool);

const TARGETS: [Target; 4] = [
    ("trust_vector_json", trust_vector),
    ("environment_json", environment),
    ("plan_toml", plan),
    ("results_csv", results),
];

#[test]
fn seeds_are_accepted_where_expected() {
    for (target, parse) in TARGETS {
        let accepted = seeds(target).iter().filter(|s| parse(s)).count();
        assert!(accepted > 0, "{target}: no seed parses");
    }
}

proptest! {
    #[test]
    fn mutated_seeds_never_panic(
        which in 0usize..4,
        pick in any::<prop::sample::Index>(),
        cut in any::<prop::sample::Index>(),
        flips in prop::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 0..4),
    ) {
        let (target, parse) = TARGETS[which];
        let all = seeds(target);
        let mut data = all[pick.index(all.len())].clone();
        data.truncate(cut.index(data.len() + 1));
        for (at, byte) in flips {
            if !data.is_empty() {
                let i = at.index(data.len());
                data[i] = byte;
            }
        }
        parse(&data);
    }
}
