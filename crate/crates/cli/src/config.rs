//! Scenario files: TOML on disk, parsed into the core config type.

use std::path::Path;

use hybrid_core::model::{build_scenario, ScenarioConfig, SCENARIO_FORMAT};
use hybrid_core::Scenario;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub fn parse_config(text: &str) -> CliResult<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    if cfg.format != SCENARIO_FORMAT {
        return Err(CliError::Config(format!(
            "unsupported format tag '{}', expected '{SCENARIO_FORMAT}'",
            cfg.format
        )));
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> CliResult<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    parse_config(&text)
}

pub fn scenario(cfg: &ScenarioConfig) -> CliResult<Scenario<f64>> {
    build_scenario(cfg).map_err(|e| CliError::Config(e.to_string()))
}

/// SHA-256 of the config with defaults filled in, serialized as JSON with
/// sorted keys. Key order and omitted defaults in the source file do not
/// change it.
pub fn digest(cfg: &ScenarioConfig) -> String {
    let value = serde_json::to_value(cfg).expect("config serializes");
    let canon = serde_json::to_string(&value).expect("json value serializes");
    hex::encode(Sha256::digest(canon.as_bytes()))
}

pub fn to_toml(cfg: &ScenarioConfig) -> String {
    toml::to_string(cfg).expect("config serializes")
}
