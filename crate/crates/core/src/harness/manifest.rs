//! `manifest.json`: deterministic run metadata. Wall-clock timestamps live
//! in the `timing.json` sidecar so repeated runs stay byte-identical.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::Result;

use super::config::{RunConfig, FORMAT_VERSION};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMING_FILE: &str = "timing.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: String,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub profile: Option<crate::champagne::RadialProfile>,
    pub weight: crate::champagne::WeightFunction,
    /// Per-command sections (`generate`, `criteria`, `simulate`, `whitney`).
    pub sections: Map<String, Value>,
}

impl RunManifest {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            format_version: FORMAT_VERSION.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config.hash(),
            seed: config.seed,
            profile: config.profile,
            weight: config.weight,
            sections: Map::new(),
        }
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Existing manifest for the same config, or a fresh one.
    pub fn open(dir: &Path, config: &RunConfig) -> Self {
        match Self::read(dir) {
            Ok(m) if m.config_hash == config.hash() && m.format_version == FORMAT_VERSION => m,
            _ => Self::new(config),
        }
    }

    pub fn set_section(&mut self, name: &str, value: impl Serialize) -> Result<()> {
        self.sections.insert(name.into(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }
}

/// Records the finish time of `command` in `timing.json`.
pub fn record_timing(dir: &Path, command: &str, seconds: f64) -> Result<()> {
    let path = dir.join(TIMING_FILE);
    let mut map: Map<String, Value> = std::fs::read_to_string(&path)
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
        .unwrap_or_default();
    let finished = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    map.insert(
        command.into(),
        serde_json::json!({ "finished_unix": finished, "elapsed_seconds": seconds }),
    );
    std::fs::write(path, serde_json::to_string_pretty(&map)? + "\n")?;
    Ok(())
}
