//! Named experiment configurations bundled into the binary.

use crate::config::{ConfigError, RunConfig};

pub const PRESETS: &[(&str, &str)] = &[
    ("labyrinth-truth", include_str!("../presets/labyrinth-truth.toml")),
    ("baseline-da", include_str!("../presets/baseline-da.toml")),
    ("delayed-da", include_str!("../presets/delayed-da.toml")),
    ("periodic-da", include_str!("../presets/periodic-da.toml")),
    ("sweep-H", include_str!("../presets/sweep-H.toml")),
    ("sweep-mu", include_str!("../presets/sweep-mu.toml")),
    ("sweep-dt", include_str!("../presets/sweep-dt.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn load(name: &str) -> Result<RunConfig, ConfigError> {
    let text = preset_text(name).ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
    RunConfig::from_toml_str(text)
}
