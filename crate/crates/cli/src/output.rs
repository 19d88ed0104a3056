//! Output directory bookkeeping: every file carries or is covered by the
//! config hash, and a manifest lists the digest of each file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::Resolved;
use crate::error::CliError;

pub struct Output {
    dir: PathBuf,
    hash: String,
    resolved: String,
    files: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path, config: &Resolved) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            hash: config.hash(),
            resolved: config.text(),
            files: Vec::new(),
        })
    }

    /// Path for a file written by someone else; it is still listed in the
    /// manifest.
    pub fn claim(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.claim(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))
    }

    /// Writes a JSON object with a `config_hash` member added.
    pub fn json(&mut self, name: &str, mut value: Value) -> Result<(), CliError> {
        match value.as_object_mut() {
            Some(obj) => {
                obj.insert("config_hash".into(), Value::String(self.hash.clone()));
            }
            None => value = serde_json::json!({ "config_hash": self.hash, "data": value }),
        }
        let mut text = serde_json::to_string_pretty(&value).expect("JSON values always serialise");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes CSV text behind a `# config_hash=...` comment line.
    pub fn csv(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = format!("# config_hash={}\n{body}", self.hash);
        self.write(name, text.as_bytes())
    }

    /// Writes `config.resolved` and `manifest.json`.
    pub fn finish(mut self) -> Result<Vec<String>, CliError> {
        let resolved = format!("# config_hash={}\n{}", self.hash, self.resolved);
        self.write("config.resolved", resolved.as_bytes())?;
        let mut digests = BTreeMap::new();
        for name in &self.files {
            let path = self.dir.join(name);
            let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
            digests.insert(name.clone(), hex::encode(Sha256::digest(&bytes)));
        }
        let manifest = serde_json::json!({ "config_hash": self.hash, "files": digests });
        let mut text =
            serde_json::to_string_pretty(&manifest).expect("JSON values always serialise");
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.files.push("manifest.json".into());
        Ok(self.files)
    }
}
