use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub kind: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub command: String,
    pub config_sha256: String,
    pub seeds: Vec<(String, u64)>,
    pub artifacts: Vec<ArtifactEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
    }

    pub fn artifacts_of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a ArtifactEntry> {
        self.artifacts.iter().filter(move |a| a.kind == kind)
    }
}

fn sha256_file(path: &Path) -> Result<(String, u64), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

/// Files written by one command. Dropping it without [`Outputs::commit`]
/// removes everything it wrote.
pub struct Outputs {
    root: PathBuf,
    created_root: bool,
    created_dirs: Vec<PathBuf>,
    files: Vec<(PathBuf, String)>,
    committed: bool,
}

impl Outputs {
    pub fn new(root: &Path) -> Result<Self, CliError> {
        let created_root = !root.exists();
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Outputs {
            root: root.to_path_buf(),
            created_root,
            created_dirs: Vec::new(),
            files: Vec::new(),
            committed: false,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Absolute path for `rel`, creating parent directories.
    pub fn path(&mut self, rel: &str) -> Result<PathBuf, CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            let mut missing = Vec::new();
            let mut p = parent;
            while !p.exists() {
                missing.push(p.to_path_buf());
                match p.parent() {
                    Some(q) => p = q,
                    None => break,
                }
            }
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            self.created_dirs.extend(missing);
        }
        Ok(path)
    }

    /// Records a file written at `rel` by other code.
    pub fn track(&mut self, rel: &str, kind: &str) {
        self.files.push((self.root.join(rel), kind.to_string()));
    }

    pub fn write(&mut self, rel: &str, kind: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let path = self.path(rel)?;
        self.track(rel, kind);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, kind: &str, value: &T) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::runtime(e.to_string()))?;
        self.write(rel, kind, text)
    }

    /// Writes the manifest listing every tracked file and keeps the outputs.
    pub fn commit(
        mut self,
        manifest_name: &str,
        command: &str,
        config_sha256: String,
        seeds: Vec<(String, u64)>,
    ) -> Result<Manifest, CliError> {
        let mut artifacts = Vec::with_capacity(self.files.len());
        for (path, kind) in &self.files {
            let (sha256, bytes) = sha256_file(path)?;
            let rel = path
                .strip_prefix(&self.root)
                .expect("tracked files live under the root")
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            artifacts.push(ArtifactEntry {
                path: rel,
                kind: kind.clone(),
                sha256,
                bytes,
            });
        }
        artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        artifacts.dedup_by(|a, b| a.path == b.path);
        let manifest = Manifest {
            format_version: MANIFEST_FORMAT_VERSION,
            command: command.to_string(),
            config_sha256,
            seeds,
            artifacts,
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::runtime(e.to_string()))?;
        let path = self.root.join(manifest_name);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.committed = true;
        Ok(manifest)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for (path, _) in &self.files {
            let _ = std::fs::remove_file(path);
        }
        // deepest first; only directories this run created and left empty
        self.created_dirs.sort_by_key(|d| std::cmp::Reverse(d.components().count()));
        for d in &self.created_dirs {
            let _ = std::fs::remove_dir(d);
        }
        if self.created_root {
            let _ = std::fs::remove_dir(&self.root);
        }
    }
}
