use ccscope_core::rate::CounterMode;
use ccscope_core::testing::ScriptedSensor;
use ccscope_core::{Registry, RegistryError};

fn scripted(name: &str, events: &[&str], sources: usize) -> Box<ScriptedSensor> {
    Box::new(ScriptedSensor::new(name, events, sources, CounterMode::Signed))
}

#[test]
fn duplicate_names_are_rejected() {
    let mut r = Registry::new();
    r.register(scripted("a", &["x"], 1)).unwrap();
    assert_eq!(
        r.register(scripted("a", &["y"], 1)).unwrap_err(),
        RegistryError::DuplicateSensor("a".into())
    );
    assert_eq!(r.len(), 1);
}

#[test]
fn absent_and_failing_sensors_contribute_nothing() {
    let mut r = Registry::new();
    let absent = r
        .register(Box::new(
            ScriptedSensor::new("gone", &["g"], 1, CounterMode::Signed).absent(),
        ))
        .unwrap();
    let broken = r
        .register(Box::new(
            ScriptedSensor::new("broken", &["b"], 1, CounterMode::Signed).failing_probe("no device"),
        ))
        .unwrap();
    let ok = r.register(scripted("ok", &["o"], 1)).unwrap();
    assert!(!r.descriptor(absent).present);
    assert!(!r.descriptor(broken).present);
    assert!(r.descriptor(ok).present);
    assert_eq!(r.diagnostic(absent), None);
    assert!(r.diagnostic(broken).unwrap().contains("no device"));
    r.enable_all();
    assert_eq!(r.headings(true, false), ["o"]);
    assert!(matches!(r.enable(&["g"]), Err(RegistryError::UnknownEvent { .. })));
}

#[test]
fn headings_concatenate_in_registration_order() {
    let first = ["p", "q", "r"];
    let second = ["s", "t"];
    let mut reg = Registry::new();
    reg.register(scripted("one", &first, 3)).unwrap();
    reg.register(scripted("two", &second, 1)).unwrap();
    reg.enable_all();

    let mut oracle: Vec<String> = first.iter().map(|s| s.to_string()).collect();
    oracle.extend(second.iter().map(|s| s.to_string()));
    assert_eq!(reg.headings(true, false), oracle);

    let mut oracle = Vec::new();
    for e in first {
        for s in 0..3 {
            oracle.push(format!("{e}@{s}"));
        }
    }
    // Single-source sensors keep bare names in discrete mode.
    oracle.extend(second.iter().map(|s| s.to_string()));
    assert_eq!(reg.headings(true, true), oracle);
    assert_eq!(reg.headings(false, false)[0], "scripted event p");
}

#[test]
fn enable_routes_names_and_is_all_or_nothing() {
    let mut reg = Registry::new();
    reg.register(scripted("one", &["alpha", "beta"], 1)).unwrap();
    reg.register(scripted("two", &["gamma"], 1)).unwrap();
    reg.enable(&["gamma", "alpha"]).unwrap();
    assert_eq!(reg.enabled_mnemonics(), ["alpha", "gamma"]);
    let err = reg.enable(&["beta", "gamam"]).unwrap_err();
    assert_eq!(
        err,
        RegistryError::UnknownEvent {
            name: "gamam".into(),
            suggestions: vec!["gamma".into()]
        }
    );
    assert!(err.to_string().contains("did you mean gamma?"));
    assert_eq!(reg.enabled_mnemonics(), ["alpha", "gamma"]);
}

#[test]
fn catalog_lists_every_sensor() {
    let mut reg = Registry::new();
    reg.register(scripted("one", &["a", "b"], 2)).unwrap();
    reg.register(Box::new(
        ScriptedSensor::new("off", &["z"], 1, CounterMode::Signed).absent(),
    ))
    .unwrap();
    let cat = reg.catalog();
    assert_eq!(cat.len(), 2);
    assert_eq!(cat[0].0.sources, 2);
    assert_eq!(cat[0].1.len(), 2);
    assert!(cat[1].1.is_empty());
}
