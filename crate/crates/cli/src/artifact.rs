//! Run manifests, atomic output, and loading of artifacts written by other commands.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub version: String,
    pub timestamp: String,
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn new(command: &str, params: &impl Serialize, seed: Option<u64>) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            params: serde_json::to_value(params)?,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            seed,
        })
    }
}

/// Serialize `body` to a JSON object and add the manifest under `"manifest"`.
pub fn with_manifest(body: &impl Serialize, manifest: &RunManifest) -> Result<Value> {
    let mut value = serde_json::to_value(body)?;
    match value.as_object_mut() {
        Some(map) => {
            map.insert("manifest".into(), serde_json::to_value(manifest)?);
        }
        None => bail!("artifact body is not a JSON object"),
    }
    Ok(value)
}

/// Write `text` to `out` via a temporary file in the same directory, or to
/// stdout when no path is given.
pub fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
            tmp.write_all(text.as_bytes())?;
            tmp.as_file().sync_all()?;
            tmp.persist(path)
                .with_context(|| format!("writing {}", path.display()))?;
            Ok(())
        }
    }
}

pub fn emit_json(value: &Value, out: Option<&Path>) -> Result<()> {
    emit(&serde_json::to_string_pretty(value)?, out)
}

pub fn emit_csv<R: Serialize>(rows: &[R], out: Option<&Path>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    let bytes = writer.into_inner().context("flushing csv")?;
    emit(&String::from_utf8(bytes)?, out)
}

/// Load a JSON artifact; a nested object under `key` takes precedence over the top level.
pub fn load<T: serde::de::DeserializeOwned>(path: &Path, key: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let inner = match value.get(key) {
        Some(v) if v.is_object() => v.clone(),
        _ => value,
    };
    serde_json::from_value(inner).with_context(|| format!("loading {key} from {}", path.display()))
}
