use offload_core::harness::{ExperimentConfig, RawConfig, KEYS};

const DEFAULT_CFG: &str = include_str!("../../../default.cfg");

#[test]
fn shipped_default_matches_reference() {
    assert_eq!(
        ExperimentConfig::from_text(DEFAULT_CFG).unwrap(),
        ExperimentConfig::default()
    );
}

#[test]
fn shipped_default_sets_every_key_but_the_matrix() {
    for (key, _, _) in KEYS {
        let present = DEFAULT_CFG
            .lines()
            .any(|l| l.split('=').next().map(str::trim) == Some(*key));
        assert_eq!(present, *key != "transition_matrix", "{key}");
    }
}

#[test]
fn overrides_apply_on_top_of_file() {
    let mut raw = RawConfig::parse(DEFAULT_CFG).unwrap();
    raw.apply_override("beta=0.9").unwrap();
    raw.apply_override("seeds = 4, 5").unwrap();
    let cfg = raw.build().unwrap();
    assert_eq!(cfg.env.weights.beta, 0.9);
    assert_eq!(cfg.seeds, vec![4, 5]);
}

#[test]
fn invalid_values_name_the_key() {
    for (text, key) in [
        ("arrival_prob = 1.5", "arrival_prob"),
        ("outage_probs = 0.1, 0.2", "outage_probs"),
        ("alpha = 0", "alpha"),
        ("horizon = many", "horizon"),
    ] {
        let err = ExperimentConfig::from_text(text).unwrap_err().to_string();
        assert!(err.contains(key), "`{text}` gave `{err}`");
    }
}
