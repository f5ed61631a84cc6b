//! Run manifests: every file-producing run writes `<output>.manifest` with
//! the effective configuration, seed, and input/output checksums, so a run
//! can be reproduced from the manifest alone.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::CliResult;

pub struct Manifest {
    command: &'static str,
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &'static str) -> Self {
        Manifest {
            command,
            entries: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.entries.push((key.to_owned(), value.to_string()));
        self
    }

    /// Record a path plus the sha256 of the file behind it.
    pub fn set_file(&mut self, key: &str, path: &Path) -> CliResult<&mut Self> {
        self.set(key, path.display());
        let bytes = std::fs::read(path)?;
        self.set(&format!("{key}-sha256"), hex::encode(Sha256::digest(&bytes)));
        Ok(self)
    }

    /// Write the manifest beside `output` as `<output>.manifest`.
    pub fn write_beside(&self, output: &Path) -> CliResult<PathBuf> {
        let mut name = output.file_name().unwrap_or_default().to_owned();
        name.push(".manifest");
        let path = output.with_file_name(name);
        let mut text = String::new();
        text.push_str("routemix-manifest 1\n");
        text.push_str(&format!("command = {}\n", self.command));
        text.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
        for (key, value) in &self.entries {
            text.push_str(&format!("{key} = {value}\n"));
        }
        std::fs::write(&path, text)?;
        Ok(path)
    }
}
