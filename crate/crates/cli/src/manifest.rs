//! Run manifests: config echo, versions, timing, checks and a hashed file
//! inventory, written atomically once a run completes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::suites::Check;

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub kind: String,
    pub config: BTreeMap<String, String>,
    pub library_version: String,
    pub cli_version: String,
    pub rng_splitting: String,
    pub wall_seconds: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `contents` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Output files of one run, recorded with their hashes as they are written.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl Outputs {
    pub fn new(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> io::Result<()> {
        if self.files.iter().any(|f| f.path == name) {
            return Err(io::Error::new(io::ErrorKind::AlreadyExists, format!("output {name} written twice")));
        }
        write_atomic(&self.dir.join(name), contents)?;
        self.files.push(FileEntry { path: name.into(), bytes: contents.len() as u64, sha256: sha256_hex(contents) });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        let mut text = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
        text.push(b'\n');
        self.write(name, &text)
    }

    /// Seals the run: the manifest lists every file written so far.
    pub fn finish(self, mut manifest: RunManifest) -> io::Result<RunManifest> {
        manifest.files = self.files;
        let mut text = serde_json::to_vec_pretty(&manifest).map_err(io::Error::other)?;
        text.push(b'\n');
        write_atomic(&self.dir.join("manifest.json"), &text)?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_known_input() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn duplicate_output_names_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Outputs::new(dir.path()).unwrap();
        out.write("a.csv", b"x\n").unwrap();
        assert!(out.write("a.csv", b"y\n").is_err());
        assert!(!dir.path().join("a.tmp").exists());
    }
}
