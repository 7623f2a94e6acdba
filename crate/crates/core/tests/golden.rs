use nla_core::oracles::{golden_reports, OracleReport};
use serde::Deserialize;

#[derive(Deserialize)]
struct GoldenFile {
    schema_version: u32,
    regenerate: String,
    values: Vec<OracleReport>,
}

fn fixture() -> GoldenFile {
    let text = include_str!("fixtures/golden.json");
    serde_json::from_str(text).expect("fixture parses")
}

/// Values obtained independently in 60-120 digit arithmetic.
const HIGH_PRECISION: [(&str, &str, f64); 3] = [
    ("q_unc", "coherent nbar=1 g=2 p=3", 0.0225564185270343),
    ("q_joint_meter", "coherent nbar=1 g=2 p=3 alpha=1/sqrt2 beta=i/sqrt2", 0.0225564185270343),
    ("q_s", "two-level c0=c1=1/sqrt2 g=2 p=1", 0.16),
];

#[test]
fn fixture_is_current() {
    let file = fixture();
    assert_eq!(file.schema_version, 1);
    assert!(file.regenerate.contains("golden --out"));
    let fresh = golden_reports().unwrap();
    assert_eq!(fresh.len(), file.values.len());
    for (old, new) in file.values.iter().zip(&fresh) {
        assert_eq!((&old.quantity, &old.context), (&new.quantity, &new.context));
        assert!((old.analytic - new.analytic).abs() <= 1e-13 * old.analytic.abs(), "{}", old.context);
        assert!((old.oracle - new.oracle).abs() <= 1e-9 * old.oracle.abs(), "{}", old.context);
    }
}

#[test]
fn every_value_agrees_with_its_oracle() {
    for r in fixture().values {
        assert!(r.passed(1.0), "{} {}: rel error {}", r.quantity, r.context, r.rel_error);
        assert!((1e-6..=1e-3).contains(&r.step));
    }
}

#[test]
fn high_precision_references() {
    let values = fixture().values;
    for (quantity, context, want) in HIGH_PRECISION {
        let r = values.iter().find(|r| r.quantity == quantity && r.context == context).expect("entry present");
        assert!((r.analytic - want).abs() <= 1e-12, "{quantity} {context}: {}", r.analytic);
    }
}
