//! Built-in scenarios, stored as JSON next to the crate sources.

use crate::error::{Error, Result};
use crate::framedgeom::{load_scenario_file, Scenario, ScenarioFile};

const BUILTINS: &[(&str, &str)] = &[
    ("real-heisenberg-contact", include_str!("../../scenarios/real-heisenberg-contact.json")),
    ("pfaff-chart", include_str!("../../scenarios/pfaff-chart.json")),
    ("involutive-product", include_str!("../../scenarios/involutive-product.json")),
    ("involutive-product-complex", include_str!("../../scenarios/involutive-product-complex.json")),
    ("flat-torus", include_str!("../../scenarios/flat-torus.json")),
    ("flat-kaehler", include_str!("../../scenarios/flat-kaehler.json")),
    ("nonkaehler-hermitian", include_str!("../../scenarios/nonkaehler-hermitian.json")),
    ("complex-heisenberg-standard", include_str!("../../scenarios/complex-heisenberg-standard.json")),
    ("complex-heisenberg-invariant", include_str!("../../scenarios/complex-heisenberg-invariant.json")),
];

/// Names of the built-in scenarios.
pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|(n, _)| *n).collect()
}

/// Source JSON of a built-in scenario.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Loads a built-in scenario by name, or a scenario file if `name` is a
/// path to an existing file.
pub fn load_scenario(name: &str) -> Result<Scenario> {
    if let Some(src) = builtin_source(name) {
        return ScenarioFile::from_json(src)?.build();
    }
    let path = std::path::Path::new(name);
    if path.is_file() {
        return load_scenario_file(path);
    }
    Err(Error::UnknownScenario(name.to_string()))
}
