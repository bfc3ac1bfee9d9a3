//! Atomic artifact writing and the provenance envelope.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

pub const TOOLKIT: &str = "rugose";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Serialize)]
pub struct Toolkit {
    pub name: &'static str,
    pub version: &'static str,
}

pub fn toolkit() -> Toolkit {
    Toolkit {
        name: TOOLKIT,
        version: VERSION,
    }
}

#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub toolkit: Toolkit,
    pub command: &'a str,
    pub seed: u64,
    pub config: &'a Value,
    pub result: T,
}

/// A file to be written into the output directory.
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn json<T: Serialize>(name: &str, value: &T) -> serde_json::Result<Self> {
        let mut contents = serde_json::to_string_pretty(value)?;
        contents.push('\n');
        Ok(Self {
            name: name.to_string(),
            contents,
        })
    }

    pub fn text(name: &str, contents: String) -> Self {
        Self {
            name: name.to_string(),
            contents,
        }
    }
}

/// `#`-prefixed provenance lines for text artifacts.
pub fn provenance_header(command: &str, seed: u64, config: &Value) -> String {
    format!("# {TOOLKIT} {VERSION} {command} seed={seed}\n# config {config}\n")
}

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(dir: &Path, artifact: &Artifact) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let target = dir.join(&artifact.name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(artifact.contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(&target).map_err(|e| e.error)?;
    Ok(target)
}
