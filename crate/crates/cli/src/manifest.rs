use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::failure::Failure;

/// Record of one artifact-producing run, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: BTreeMap<String, PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub duration_seconds: f64,
    pub details: BTreeMap<String, Value>,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunManifest {
    pub fn start(command: &str) -> Self {
        RunManifest {
            command: command.into(),
            argv: std::env::args().collect(),
            config: Value::Null,
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION").into(),
            duration_seconds: 0.0,
            details: BTreeMap::new(),
            started: Some(Instant::now()),
        }
    }

    pub fn config(&mut self, config: impl Serialize) -> Result<(), Failure> {
        self.config = serde_json::to_value(config)?;
        Ok(())
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.into(), path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn detail(&mut self, name: &str, value: impl Serialize) -> Result<(), Failure> {
        self.details.insert(name.into(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn write(mut self, path: &Path) -> Result<(), Failure> {
        if let Some(t) = self.started {
            self.duration_seconds = t.elapsed().as_secs_f64();
        }
        std::fs::write(path, serde_json::to_string_pretty(&self)? + "\n")?;
        Ok(())
    }
}

/// `<file>.manifest.json` next to a single-file output.
pub fn beside(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}
