use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use rfadapt::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let name = path.file_name().ok_or_else(|| Error::Io(format!("{}: not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", tmp.display()));
    let mut f = std::fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

/// Replay record written next to every output set. Contains no timestamps,
/// so equal runs give equal manifests.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// SHA-256 of the canonical JSON of everything that configured the run.
    pub config_hash: String,
    pub seed: u64,
    pub data_source: String,
    pub files: Vec<FileEntry>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub tolerances: serde_json::Value,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub results: serde_json::Value,
}

/// Collects output files for one command and writes them plus a manifest.
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), files: Vec::new() }
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.files.push(FileEntry { path: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    #[allow(clippy::too_many_arguments)]
    pub fn finish(
        mut self,
        manifest_name: &str,
        command: String,
        config: &serde_json::Value,
        seed: u64,
        data_source: &str,
        tolerances: serde_json::Value,
        results: serde_json::Value,
    ) -> Result<PathBuf> {
        let files = std::mem::take(&mut self.files);
        let m = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash: sha256_hex(config.to_string().as_bytes()),
            seed,
            data_source: data_source.to_string(),
            files,
            tolerances,
            results,
        };
        self.write_json(manifest_name, &m)
    }
}
