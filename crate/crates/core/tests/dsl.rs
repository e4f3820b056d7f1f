mod common;

use common::scenario_from_seed;
use proptest::prelude::*;
use wigner_paths::library::SHIPPED;
use wigner_paths::scenario::{
    parse_scenario, parse_scenario_bytes, serialize_scenario, ParseErrorKind, Scenario,
};

#[test]
fn shipped_files_round_trip() {
    for (name, text) in SHIPPED {
        let s = parse_scenario(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let back = parse_scenario(&serialize_scenario(&s)).unwrap();
        assert!(s.approx_eq(&back, 1e-12), "{name}");
    }
}

#[test]
fn hand_edited_label_is_reported() {
    let text = serialize_scenario(&parse_scenario(SHIPPED[3].1).unwrap());
    let edited = text.replacen("heads down =", "heads sideways =", 1);
    let e = parse_scenario(&edited).unwrap_err();
    assert!(matches!(e.kind, ParseErrorKind::UnknownLabel { .. }), "{e}");
    let edited = text.replacen("on coin", "on dice", 1);
    let e = parse_scenario(&edited).unwrap_err();
    assert_eq!(e.kind, ParseErrorKind::UnknownSubsystem("dice".into()));
}

#[test]
fn crlf_files_parse() {
    let text = SHIPPED[0].1.replace('\n', "\r\n");
    let s = parse_scenario(&text).unwrap();
    assert!(s.approx_eq(&parse_scenario(SHIPPED[0].1).unwrap(), 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_scenarios_round_trip(seed in any::<u64>()) {
        let s = scenario_from_seed(seed);
        let back = parse_scenario(&serialize_scenario(&s)).unwrap();
        prop_assert!(s.approx_eq(&back, 1e-12));
    }

    #[test]
    fn random_scenarios_json_round_trip(seed in any::<u64>()) {
        let s = scenario_from_seed(seed);
        let back = Scenario::from_json(&s.to_json()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
        if let Err(e) = parse_scenario_bytes(&bytes) {
            prop_assert!(e.line >= 1 && e.column >= 1);
        }
    }

    #[test]
    fn mutated_files_never_panic(which in 0..SHIPPED.len(), at in any::<usize>(), byte in any::<u8>()) {
        let mut bytes = SHIPPED[which].1.as_bytes().to_vec();
        let at = at % bytes.len();
        bytes[at] = byte;
        let _ = parse_scenario_bytes(&bytes);
    }
}
