//! Atomic file output and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::failure::Failure;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

/// Collects the files of one run and writes them through a temp file + rename.
pub struct OutputDir {
    dir: PathBuf,
    written: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("cannot create {}: {e}", dir.display())))?;
        Ok(OutputDir { dir: dir.to_path_buf(), written: BTreeMap::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let io = |e: std::io::Error| Failure::Input(format!("cannot write {}: {e}", target.display()));
        let mut file = fs::File::create(&tmp).map_err(io)?;
        file.write_all(bytes).map_err(io)?;
        file.sync_all().map_err(io)?;
        fs::rename(&tmp, &target).map_err(io)?;
        self.written.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).expect("output records serialize");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(mut self, mut manifest: Manifest) -> Result<(), Failure> {
        manifest.outputs = self.written.clone();
        self.write_json("manifest.json", &manifest)
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub parameters: serde_json::Value,
    /// Input path → sha256 of its contents.
    pub inputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub version: String,
    pub wall_time_seconds: f64,
    /// Output file → sha256, filled in by [`OutputDir::finish`].
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, parameters: serde_json::Value) -> Self {
        Manifest {
            command: command.to_string(),
            parameters,
            inputs: BTreeMap::new(),
            seed: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_seconds: 0.0,
            outputs: BTreeMap::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path, text: &str) {
        self.inputs.insert(path.display().to_string(), sha256_hex(text.as_bytes()));
    }
}

/// 17 significant digits.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn optional_float(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}
