//! Named, in-repo run configurations.

use crate::config::RunConfig;

pub const PRESET_NAMES: &[&str] = &["fig2", "table1", "recouple3", "mrev16-offsets"];

/// Raw JSON text of a named preset.
pub fn preset_text(name: &str) -> Option<&'static str> {
    match name {
        "fig2" => Some(include_str!("../presets/fig2.json")),
        "table1" => Some(include_str!("../presets/table1.json")),
        "recouple3" => Some(include_str!("../presets/recouple3.json")),
        "mrev16-offsets" => Some(include_str!("../presets/mrev16-offsets.json")),
        _ => None,
    }
}

pub fn preset(name: &str) -> Option<RunConfig> {
    preset_text(name).map(|t| serde_json::from_str(t).expect("presets are valid JSON"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_parse_and_validate() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap_or_else(|| panic!("missing preset {name}"));
            let diags = crate::config::validate(&cfg);
            assert!(diags.is_empty(), "{name}: {diags:?}");
        }
    }
}
