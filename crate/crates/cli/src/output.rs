//! Output directory handling: every run leaves its resolved settings and
//! the tool version next to its artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use pathwise::{Error, Result};
use serde::Serialize;

pub const RUN_CONFIG: &str = "run_config.json";

pub struct OutputDir {
    root: PathBuf,
}

#[derive(Serialize)]
struct RunRecord<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    settings: &'a T,
}

impl OutputDir {
    /// Creates the directory and records the resolved settings.
    pub fn create<T: Serialize>(root: &Path, command: &str, settings: &T) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::Io {
            path: root.to_path_buf(),
            source: e,
        })?;
        let out = Self {
            root: root.to_path_buf(),
        };
        out.json(
            RUN_CONFIG,
            &RunRecord {
                tool: env!("CARGO_BIN_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                command,
                settings,
            },
        )?;
        Ok(out)
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn bytes(&self, rel: impl AsRef<Path>, data: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::Io {
                path: parent.to_path_buf(),
                source: e,
            })?;
        }
        fs::write(&path, data).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        Ok(path)
    }

    pub fn json<T: Serialize + ?Sized>(&self, rel: impl AsRef<Path>, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.bytes(rel, text.as_bytes())
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(serde_json::from_str(&text)?)
}
