use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{PipelineError, RunConfig};
use crate::io::{file_digest, sha256_hex, write_bytes};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub stage: String,
    pub config: serde_json::Value,
    /// Input label -> path and sha256.
    pub inputs: BTreeMap<String, FileDigest>,
    /// Artifact file name (relative to the output directory) -> sha256.
    pub outputs: BTreeMap<String, String>,
    pub counts: BTreeMap<String, serde_json::Value>,
    pub created_at: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl RunManifest {
    pub fn file_name(stage: &str) -> String {
        format!("manifest.{stage}.json")
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::from_io(path, e))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    /// Artifacts whose current digest differs from the recorded one.
    pub fn verify_outputs(&self, dir: &Path) -> Result<Vec<String>, PipelineError> {
        let mut changed = Vec::new();
        for (name, digest) in &self.outputs {
            let p = dir.join(name);
            let now = file_digest(&p).map_err(PipelineError::from)?;
            if &now != digest {
                changed.push(name.clone());
            }
        }
        Ok(changed)
    }
}

/// Collects a stage's artifacts and writes them with a manifest.
pub(crate) struct Stage<'a> {
    name: &'static str,
    config: &'a RunConfig,
    inputs: BTreeMap<String, FileDigest>,
    outputs: BTreeMap<String, String>,
    counts: BTreeMap<String, serde_json::Value>,
    written: Vec<PathBuf>,
}

impl<'a> Stage<'a> {
    pub fn new(name: &'static str, config: &'a RunConfig) -> Result<Self, PipelineError> {
        std::fs::create_dir_all(&config.output_dir).map_err(|e| PipelineError::from_io(&config.output_dir, e))?;
        Ok(Stage { name, config, inputs: BTreeMap::new(), outputs: BTreeMap::new(), counts: BTreeMap::new(), written: Vec::new() })
    }

    pub fn input(&mut self, label: &str, path: &Path) -> Result<(), PipelineError> {
        let sha256 = file_digest(path)?;
        self.inputs.insert(label.to_string(), FileDigest { path: path.display().to_string(), sha256 });
        Ok(())
    }

    pub fn count(&mut self, key: &str, value: impl Serialize) {
        self.counts.insert(key.to_string(), serde_json::to_value(value).expect("count serializes"));
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let path = self.config.output_dir.join(name);
        write_bytes(&path, bytes)?;
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
        self.written.push(path);
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), PipelineError> {
        let mut s = serde_json::to_string_pretty(value).expect("report serializes");
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    pub fn write_jsonl<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), PipelineError> {
        let mut s = String::new();
        for r in rows {
            s.push_str(&serde_json::to_string(r).expect("row serializes"));
            s.push('\n');
        }
        self.write(name, s.as_bytes())
    }

    pub fn finish(mut self) -> Result<Vec<PathBuf>, PipelineError> {
        let manifest = RunManifest {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            stage: self.name.to_string(),
            config: serde_json::to_value(self.config).expect("config serializes"),
            inputs: std::mem::take(&mut self.inputs),
            outputs: std::mem::take(&mut self.outputs),
            counts: std::mem::take(&mut self.counts),
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        };
        let name = RunManifest::file_name(self.name);
        let path = self.config.output_dir.join(&name);
        let mut s = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        s.push('\n');
        write_bytes(&path, s.as_bytes())?;
        self.written.push(path);
        Ok(self.written)
    }
}
