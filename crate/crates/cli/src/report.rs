use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use encdi::{Error, Result};

/// Provenance block embedded in every report.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// SHA-256 of the resolved parameters as compact JSON.
    pub config_digest: String,
    pub inputs: Vec<String>,
    pub seed: u64,
    pub version: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, params: &Value, inputs: &[&Path], seed: u64) -> Self {
        // serde_json maps keep keys sorted, so this text is canonical
        let canonical = serde_json::to_string(params).expect("parameters serialize");
        Self {
            subcommand: subcommand.to_owned(),
            config_digest: hex::encode(Sha256::digest(canonical.as_bytes())),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_owned(),
        }
    }
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

/// Writes `{"manifest": ..., key: body}` as pretty JSON to `out` or stdout.
pub fn emit(manifest: &RunManifest, key: &str, body: Value, out: Option<&PathBuf>) -> Result<()> {
    let mut doc = serde_json::Map::new();
    doc.insert("manifest".into(), to_value(manifest));
    doc.insert(key.into(), body);
    let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("report serializes");
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(Error::IoFailure)?;
        }
    }
    Ok(())
}
