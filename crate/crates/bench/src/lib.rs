//! Shared fixtures for the benchmarks.

use charlap_core::charops::{build_characteristic_ops, CharacteristicOps};
use charlap_core::{load_scenario, Scenario};

/// Scenarios the benchmarks sweep over, from cheap to expensive.
pub const SCENARIOS: [&str; 3] = ["real-heisenberg-contact", "nonkaehler-hermitian", "complex-heisenberg-standard"];

pub fn prepared(name: &str) -> (Scenario, CharacteristicOps) {
    let s = load_scenario(name).expect("built-in scenario");
    let ops = build_characteristic_ops(&s).expect("operators");
    (s, ops)
}
