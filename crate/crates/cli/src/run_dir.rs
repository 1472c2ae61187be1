//! Output directories written through a staging directory.
//!
//! Files are written to a hidden sibling of the target. `commit` hashes every
//! file, writes `manifest.json` last and renames the staging directory into
//! place. Dropping an uncommitted `RunDir` removes the staging directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Invalid;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub input: Option<FileEntry>,
    pub files: Vec<FileEntry>,
}

pub struct RunDir {
    staging: PathBuf,
    target: PathBuf,
    committed: bool,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_entry(path: &Path, name: String) -> Result<FileEntry> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FileEntry { path: name, bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) })
}

/// `<root>/<timestamp>_<name>`, with a numeric suffix if that already exists.
pub fn default_target(root: &Path, name: &str) -> PathBuf {
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S");
    let base = root.join(format!("{stamp}_{name}"));
    let mut candidate = base.clone();
    let mut n = 2;
    while candidate.exists() {
        candidate = PathBuf::from(format!("{}-{n}", base.display()));
        n += 1;
    }
    candidate
}

impl RunDir {
    pub fn create(target: PathBuf) -> Result<Self> {
        if target.exists() {
            return Err(Invalid(format!("output directory {} already exists", target.display())).into());
        }
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let name = target
            .file_name()
            .ok_or_else(|| Invalid(format!("invalid output directory {}", target.display())))?
            .to_string_lossy()
            .into_owned();
        fs::create_dir_all(&parent).with_context(|| format!("creating {}", parent.display()))?;
        let staging = parent.join(format!(".{name}.partial-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir(&staging).with_context(|| format!("creating {}", staging.display()))?;
        Ok(Self { staging, target, committed: false })
    }

    pub fn dir(&self) -> &Path {
        &self.staging
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.staging.join(name)
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn commit(mut self, command: &str, seed: u64, input: Option<FileEntry>) -> Result<PathBuf> {
        let mut names: Vec<String> = fs::read_dir(&self.staging)?
            .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
            .collect::<std::io::Result<_>>()?;
        names.sort();
        let files = names
            .into_iter()
            .map(|n| file_entry(&self.staging.join(&n), n))
            .collect::<Result<Vec<_>>>()?;
        let manifest = Manifest { tool: "spincell", version: env!("CARGO_PKG_VERSION"), command: command.to_string(), seed, input, files };
        self.write_json(MANIFEST, &manifest)?;
        fs::rename(&self.staging, &self.target)
            .with_context(|| format!("moving results to {}", self.target.display()))?;
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for RunDir {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}
