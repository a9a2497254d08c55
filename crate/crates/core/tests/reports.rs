use charlap_core::casebook::builtin_names;
use charlap_core::{load_scenario, run_report, Check, CheckSet, Status};
use serde_json::Value;

fn quick() -> CheckSet {
    CheckSet { witness_trials: 6, symbol_pairs: 24, ..CheckSet::default() }
}

fn data(r: &charlap_core::Report, c: Check) -> &Value {
    &r.get(c).unwrap().data
}

#[test]
fn same_seed_gives_identical_bytes() {
    for name in ["pfaff-chart", "nonkaehler-hermitian"] {
        let s = load_scenario(name).unwrap();
        let a = run_report(&s, &quick(), Some(11)).to_json();
        let b = run_report(&s, &quick(), Some(11)).to_json();
        assert_eq!(a, b, "{name}");
        let c = run_report(&s, &quick(), Some(12)).to_json();
        assert_ne!(a, c, "{name}: the seed must matter");
    }
}

#[test]
fn json_is_versioned_and_parses_back() {
    let s = load_scenario("flat-torus").unwrap();
    let text = run_report(&s, &quick(), None).to_json();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["schema"], "charlap-report/1");
    assert_eq!(v["checks"].as_array().unwrap().len(), Check::all().len());
    // floats carry 17 significant digits
    assert!(text.contains("e-"), "{text}");
    assert!(text.lines().any(|l| l.trim_start().starts_with("\"max_defect\": ") && l.contains('.') && l.split('.').nth(1).unwrap().split('e').next().unwrap().len() == 16));
}

#[test]
fn invariant_heisenberg_report() {
    let s = load_scenario("complex-heisenberg-invariant").unwrap();
    let r = run_report(&s, &quick(), None);
    assert!(r.passed);
    assert_eq!(data(&r, Check::Obstruct)["verdict"]["bigrading_preserved"], false);
    assert!(!data(&r, Check::Obstruct)["verdict"]["witness"].is_null());
    assert_eq!(data(&r, Check::Bracket)["bracket_generating"], true);
    assert_eq!(r.get(Check::Witness).unwrap().status, Status::Pass);
    assert_eq!(data(&r, Check::Witness)["witness"]["field_combination"], serde_json::json!([1.0, 0.0]));
}

#[test]
fn flat_kaehler_report() {
    let s = load_scenario("flat-kaehler").unwrap();
    let r = run_report(&s, &quick(), None);
    assert!(r.passed);
    assert_eq!(data(&r, Check::Kaehler)["is_kaehler"], "yes");
    assert!(data(&r, Check::Symbols)["laplacian"].as_f64().unwrap() < 1e-8);
    assert!(data(&r, Check::Identity)["max_residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn involutive_product_report() {
    let s = load_scenario("involutive-product-complex").unwrap();
    let r = run_report(&s, &quick(), None);
    assert!(r.passed);
    assert_eq!(data(&r, Check::Obstruct)["symbol"]["max_symbol"].as_f64(), Some(0.0));
    assert_eq!(data(&r, Check::Obstruct)["verdict"]["bigrading_preserved"], true);
    for name in ["involutive-product", "involutive-product-complex"] {
        let r = run_report(&load_scenario(name).unwrap(), &CheckSet { checks: vec![Check::Bracket], ..quick() }, None);
        assert_eq!(data(&r, Check::Bracket)["bracket_generating"], false, "{name}");
    }
}

#[test]
fn every_builtin_passes_its_checks() {
    for name in builtin_names() {
        let r = run_report(&load_scenario(name).unwrap(), &quick(), None);
        let bad: Vec<_> = r.checks.iter().filter(|c| !matches!(c.status, Status::Pass | Status::Skipped)).collect();
        assert!(r.passed, "{name}: {bad:?}");
    }
}

#[test]
fn check_names_round_trip() {
    for c in Check::all() {
        assert_eq!(c.name().parse::<Check>().unwrap(), c);
    }
    assert!("nope".parse::<Check>().is_err());
}

#[test]
fn structure_identities_hold_and_the_mixed_sandwich_does_not_vanish() {
    for name in ["complex-heisenberg-invariant", "pfaff-chart"] {
        let s = load_scenario(name).unwrap();
        let ops = charlap_core::charops::build_characteristic_ops(&s).unwrap();
        let r = charlap_core::casebook::structure_residuals(&s, &ops, 4).unwrap();
        assert!(r.passed(), "{name}: {r:?}");
        if s.is_complex() {
            assert!(r.sandwich.unwrap() < 1e-10);
            assert!(r.sandwich_mixed.unwrap() > 0.1, "{r:?}");
        } else {
            assert!(r.sandwich.is_none());
        }
    }
}
