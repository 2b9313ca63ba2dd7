use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use specfuse::{Error, Result, WavelengthGrid};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct GridSummary {
    pub count: usize,
    pub first: f64,
    pub last: f64,
    pub wavelengths: Vec<f64>,
}

impl From<&WavelengthGrid> for GridSummary {
    fn from(g: &WavelengthGrid) -> Self {
        GridSummary {
            count: g.len(),
            first: g.first(),
            last: g.last(),
            wavelengths: g.as_slice().to_vec(),
        }
    }
}

/// Run record written next to every output. The timestamp is the only
/// field that changes between identical runs.
#[derive(Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub timestamp: String,
    pub manifest_sha256: Option<String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<String>,
    pub grid: Option<GridSummary>,
    pub method: Option<String>,
    pub seed: Option<u64>,
    pub cap: Option<f64>,
    pub normalization: Option<String>,
    pub workers: usize,
}

impl Provenance {
    pub fn new(subcommand: &'static str) -> Self {
        Provenance {
            tool: "specfuse",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            manifest_sha256: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            grid: None,
            method: None,
            seed: None,
            cap: None,
            normalization: None,
            workers: specfuse::parallel::worker_count(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<String> {
        let digest = sha256_file(path)?;
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: digest.clone(),
        });
        Ok(digest)
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("provenance serializes");
        text.push('\n');
        write_file(path, text.as_bytes())
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `<file>.provenance.json` for file outputs.
pub fn beside(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".provenance.json");
    PathBuf::from(s)
}
