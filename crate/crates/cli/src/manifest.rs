use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, Result};

pub const RUN_MANIFEST: &str = "run.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashedFile {
    pub path: PathBuf,
    pub sha256: String,
}

impl HashedFile {
    pub fn of(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| io_err(path.display(), e))?;
        Ok(Self::of_bytes(path, &bytes))
    }

    pub fn of_bytes(path: &Path, bytes: &[u8]) -> Self {
        Self {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub load_secs: f64,
    pub solve_secs: f64,
    pub write_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub converged: bool,
    pub iterations: usize,
    pub u_residual: f64,
    pub z_residual: f64,
    pub objective: f64,
    pub feasibility_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputComponent {
    pub name: String,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub workers: usize,
    pub config: HashedFile,
    pub inputs: Vec<HashedFile>,
    pub out_dir: PathBuf,
    pub components: Vec<OutputComponent>,
    pub diagnostics: String,
    pub timings: Timings,
    pub convergence: Convergence,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(RUN_MANIFEST);
        let text = toml::to_string(self).map_err(|e| io_err(path.display(), e))?;
        fs::write(&path, text).map_err(|e| io_err(path.display(), e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(RUN_MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| io_err(path.display(), e))?;
        toml::from_str(&text).map_err(|e| io_err(path.display(), e.message()))
    }
}
