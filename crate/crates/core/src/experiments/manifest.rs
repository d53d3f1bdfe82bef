use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
}

/// Everything needed to rerun an experiment and find its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub seed: u64,
    pub replications: u64,
    pub n_grid: Vec<usize>,
    /// Desk-scale settings next to their reference values, e.g. `replications -> "1e5 (1e6)"`.
    pub scale: BTreeMap<String, String>,
    pub parameters: BTreeMap<String, String>,
    pub threads: usize,
    pub outputs: Vec<String>,
    pub status: RunStatus,
    pub wall_clock_secs: Option<f64>,
}

impl RunManifest {
    pub fn new(experiment: impl Into<String>, seed: u64, replications: u64, n_grid: Vec<usize>) -> Self {
        RunManifest {
            experiment: experiment.into(),
            seed,
            replications,
            n_grid,
            scale: BTreeMap::new(),
            parameters: BTreeMap::new(),
            threads: rayon::current_num_threads(),
            outputs: Vec::new(),
            status: RunStatus::Running,
            wall_clock_secs: None,
        }
    }

    pub fn scale(mut self, key: &str, value: impl ToString) -> Self {
        self.scale.insert(key.into(), value.to_string());
        self
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.into(), value.to_string());
        self
    }
}

/// An output directory with `manifest.json` written before any result.
#[derive(Debug)]
pub struct RunDir {
    dir: PathBuf,
    manifest: RunManifest,
    start: Instant,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl RunDir {
    pub fn create(dir: impl AsRef<Path>, manifest: RunManifest) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let run = RunDir { dir, manifest, start: Instant::now() };
        run.save()?;
        Ok(run)
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        if !self.manifest.outputs.iter().any(|o| o == name) {
            self.manifest.outputs.push(name.to_string());
            self.save()?;
        }
        Ok(path)
    }

    pub fn finish(mut self) -> Result<RunManifest> {
        self.manifest.status = RunStatus::Complete;
        self.manifest.wall_clock_secs = Some(self.start.elapsed().as_secs_f64());
        self.save()?;
        Ok(self.manifest)
    }

    fn save(&self) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(self.dir.join(MANIFEST_FILE), text + "\n")?;
        Ok(())
    }
}
