use proptest::prelude::*;
use qthermo::scenarios::{Scenario, ScenarioConfig, BUNDLED};

fn exercise(text: &str) {
    if let Ok(s) = Scenario::parse(text) {
        let _ = s.time_grid();
        if let Some(axis) = &s.sweep {
            assert_eq!(axis.values().len(), axis.n);
        }
    }
    if let Ok(cfg) = ScenarioConfig::from_toml_str(text) {
        let _ = cfg.resolve();
    }
}

#[test]
fn fuzz_seeds_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/parse_config");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        assert!(Scenario::parse(&text).is_ok());
        n += 1;
    }
    assert_eq!(n, BUNDLED.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn arbitrary_text_never_panics(text in ".{0,400}") {
        exercise(&text);
    }

    #[test]
    fn mangled_seeds_never_panics(
        seed in 0..BUNDLED.len(),
        drop in prop::collection::vec(any::<bool>(), 32),
        value in prop_oneof![
            Just("0".to_string()),
            Just("-1.0".to_string()),
            Just("nan".to_string()),
            Just("inf".to_string()),
            Just("1e308".to_string()),
            Just("\"x\"".to_string()),
            any::<i64>().prop_map(|v| v.to_string()),
            any::<f64>().prop_map(|v| format!("{v:e}")),
        ],
        target in 0usize..32,
    ) {
        let (_, text) = BUNDLED[seed];
        let lines: Vec<String> = text
            .lines()
            .enumerate()
            .filter(|(i, _)| !drop[i % 32] || i % 7 == 0)
            .map(|(i, l)| match l.split_once(" = ") {
                Some((k, _)) if i % 32 == target => format!("{k} = {value}"),
                _ => l.to_string(),
            })
            .collect();
        exercise(&lines.join("\n"));
    }
}
