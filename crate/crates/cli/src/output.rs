use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use venuetier::io::{atomic_write, config_hash, header_line, TOOL_NAME, TOOL_VERSION};

use crate::GlobalArgs;

/// Argument keys naming locations rather than content; they do not enter
/// the config hash.
const LOCATION_KEYS: &[&str] = &["out", "out_dir", "run_dir"];

/// Provenance shared by every file a command writes.
pub struct RunContext {
    command: &'static str,
    config: Value,
    header: String,
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunContext {
    /// Echo of the global flags and command arguments. Input paths are
    /// replaced by content digests so the hash depends on data, not location.
    pub fn new<A: Serialize>(g: &GlobalArgs, command: &'static str, args: &A, inputs: &[(&str, &Path)]) -> Result<Self> {
        let mut params = serde_json::to_value(args)?;
        if let Value::Object(map) = &mut params {
            for key in LOCATION_KEYS {
                map.remove(*key);
            }
            for (key, path) in inputs {
                map.insert(key.to_string(), json!({ "sha256": file_digest(path)? }));
            }
        }
        let config = json!({
            "tool": TOOL_NAME,
            "version": TOOL_VERSION,
            "command": command,
            "seed": g.seed,
            "strict": g.strict(),
            "standardize": g.standardize(),
            "pna_denominator": g.pna_denominator,
            "ddi_norm": g.ddi_norm,
            "min_years": g.min_years,
            "isolation_filter": g.isolation_filter,
            "params": params,
        });
        let header = header_line(&config_hash(&config)?);
        Ok(RunContext { command, config, header })
    }

    /// Adds a derived value to the config echo written by `write_config`.
    pub fn note(&mut self, key: &str, value: Value) {
        if let Value::Object(map) = &mut self.config {
            map.insert(key.to_string(), value);
        }
    }

    pub fn render(&self, body: &str) -> String {
        format!("{}\n{body}", self.header)
    }

    pub fn write(&self, dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
        let path = dir.join(name);
        atomic_write(&path, self.render(body).as_bytes())?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.write(dir, name, &body)
    }

    /// `<command>_config.json`
    pub fn write_config(&self, dir: &Path) -> Result<PathBuf> {
        self.write_json(dir, &format!("{}_config.json", self.command), &self.config)
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// JSON text with leading `#` header lines removed.
pub fn strip_header(text: &str) -> &str {
    let mut rest = text;
    while rest.starts_with('#') {
        rest = rest.split_once('\n').map_or("", |(_, r)| r);
    }
    rest
}
