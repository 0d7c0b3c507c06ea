//! Bundled scenarios, compiled into the binary.

use crate::config::{SchemaError, Scenario};

pub const BUNDLED: &[(&str, &str)] = &[
    ("cubic_speed_oracle", include_str!("../scenarios/cubic_speed_oracle.toml")),
    ("thm11i_cubic", include_str!("../scenarios/thm11i_cubic.toml")),
    ("thm11i_periodic", include_str!("../scenarios/thm11i_periodic.toml")),
    ("spark_split", include_str!("../scenarios/spark_split.toml")),
    ("thm11iii_terrace", include_str!("../scenarios/thm11iii_terrace.toml")),
    ("thm12iii_terrace", include_str!("../scenarios/thm12iii_terrace.toml")),
    ("ignition_pure", include_str!("../scenarios/ignition_pure.toml")),
    ("ignition_violator", include_str!("../scenarios/ignition_violator.toml")),
    ("pulsating_ignition", include_str!("../scenarios/pulsating_ignition.toml")),
    ("ergodic_random", include_str!("../scenarios/ergodic_random.toml")),
    ("properties_cubic", include_str!("../scenarios/properties_cubic.toml")),
];

pub fn bundled(name: &str) -> Option<Result<Scenario, SchemaError>> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(n, text)| Scenario::parse(text, &format!("bundled:{n}")))
}

/// A bundled scenario name or a path to a config file.
pub fn load(name_or_path: &str) -> anyhow::Result<Scenario> {
    if let Some(sc) = bundled(name_or_path) {
        return Ok(sc?);
    }
    let text = std::fs::read_to_string(name_or_path)
        .map_err(|e| SchemaError(format!("{name_or_path}: not a bundled scenario and not readable ({e})")))?;
    Ok(Scenario::parse(&text, name_or_path)?)
}
