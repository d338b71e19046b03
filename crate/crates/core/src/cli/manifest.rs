use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub name: String,
    /// Relative to the run directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    /// Shapes generation seed; absent for loaded feature files.
    pub data: Option<u64>,
    pub split: u64,
    pub train: u64,
}

/// Everything needed to repeat a run on the same build.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub rng_algorithm: String,
    pub started_unix_secs: u64,
    pub finished_unix_secs: u64,
    pub seeds: Seeds,
    pub config: ExperimentConfig,
    pub final_success: f64,
    pub artifacts: Vec<Artifact>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::file(path))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.line(), e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::invalid(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(Error::file(path))?;
        Ok(())
    }

    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }

    /// Checks that every artifact exists under `run_dir` with its recorded
    /// size and checksum.
    pub fn verify(&self, run_dir: &Path) -> Result<()> {
        for a in &self.artifacts {
            let found = describe(&a.name, run_dir, &a.path)?;
            if found.bytes != a.bytes || found.sha256 != a.sha256 {
                return Err(Error::invalid(format!("artifact {} ({}) does not match its checksum", a.name, a.path)));
            }
        }
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let mut reader = BufReader::new(File::open(path).map_err(Error::file(path))?);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    let mut total = 0u64;
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    Ok((hex::encode(hasher.finalize()), total))
}

pub fn describe(name: &str, run_dir: &Path, relative: &str) -> Result<Artifact> {
    let (sha256, bytes) = sha256_file(&run_dir.join(relative))?;
    Ok(Artifact {
        name: name.to_string(),
        path: relative.to_string(),
        sha256,
        bytes,
    })
}
