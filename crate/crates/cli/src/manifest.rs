//! Run manifests: every report directory gets exactly one `manifest.json`
//! recording what ran, over which input bytes, with which configuration.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const FIXED_CLOCK: &str = "1970-01-01T00:00:00Z";

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub window_days: i64,
    pub windowless: bool,
    pub include_transfers: bool,
    pub format: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub created_utc: String,
    pub config: ConfigEcho,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: ConfigEcho, fixed_clock: bool) -> RunManifest {
        let created_utc = if fixed_clock {
            FIXED_CLOCK.to_owned()
        } else {
            chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string()
        };
        RunManifest {
            tool: "washtrade".to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            created_utc,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path, bytes: &[u8]) {
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: format!("{:x}", hasher.finalize()),
        });
    }

    pub fn add_output(&mut self, name: &str) {
        self.outputs.push(name.to_owned());
    }

    pub fn write(&mut self, out_dir: &Path) -> std::io::Result<PathBuf> {
        self.outputs.sort();
        let path = out_dir.join("manifest.json");
        let body = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, body + "\n")?;
        Ok(path)
    }
}
