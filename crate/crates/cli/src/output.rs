//! Output directory bookkeeping: every file written through [`Outputs`]
//! is hashed and listed in manifest.json.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::hex;

pub const MANIFEST_SCHEMA: &str = "nullflow-manifest/1";
pub const REPORT_SCHEMA: &str = "nullflow-report/1";

#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<(String, u64, String)>,
    /// Wall-clock measurements; kept out of the hashed outputs.
    timings: serde_json::Map<String, Value>,
}

impl Outputs {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            timings: serde_json::Map::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `name` (a path relative to the output directory).
    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> std::io::Result<PathBuf> {
        let bytes = contents.as_ref();
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.files.retain(|(n, _, _)| n != name);
        self.files
            .push((name.to_string(), bytes.len() as u64, hex(&Sha256::digest(bytes))));
        Ok(path)
    }

    pub fn record_timing(&mut self, name: &str, detail: &str) {
        self.timings.insert(name.to_string(), Value::String(detail.to_string()));
    }

    pub fn write_json(&mut self, name: &str, v: &Value) -> std::io::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(v).expect("json serializes");
        text.push('\n');
        self.write(name, text)
    }

    /// Writes manifest.json describing everything written so far.
    pub fn finish(mut self, command: &str, config_sha256: &str, config: &str, exit_code: i32) -> std::io::Result<()> {
        let outputs: Vec<Value> = self
            .files
            .iter()
            .map(|(name, bytes, sha)| json!({ "file": name, "bytes": bytes, "sha256": sha }))
            .collect();
        let created = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = json!({
            "schema": MANIFEST_SCHEMA,
            "command": command,
            "exit_code": exit_code,
            "config_sha256": config_sha256,
            "config": config,
            "versions": {
                "nullflow-core": nullflow::VERSION,
                "nullflow-cli": env!("CARGO_PKG_VERSION"),
            },
            "threads": rayon::current_num_threads(),
            "outputs": outputs,
            "timings": self.timings,
            "created_unix": created,
        });
        self.write_json("manifest.json", &manifest)?;
        Ok(())
    }
}
