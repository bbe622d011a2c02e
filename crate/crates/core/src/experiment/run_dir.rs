// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run directory: config snapshot, writer lock and stamped text artifacts.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, CODE_VERSION};
use crate::error::{Error, Result};

pub const CONFIG_FILE: &str = "config.toml";
const LOCK_FILE: &str = ".lock";

/// Removes the lock file on drop.
#[derive(Debug)]
struct Lock(PathBuf);

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    pub config: ExperimentConfig,
    hash: String,
    /// Accept artifacts stamped with a different config hash.
    pub stage_override: bool,
    _lock: Lock,
}

impl RunDir {
    /// Open (creating if needed) a run directory for `config` and take its lock.
    ///
    /// An existing `config.toml` with a different hash is refused unless
    /// `stage_override` is set, in which case it is replaced.
    pub fn open(root: &Path, config: ExperimentConfig, stage_override: bool) -> Result<Self> {
        config.validate()?;
        fs::create_dir_all(root)?;
        let lock_path = root.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&lock_path) {
            Ok(_) => {}
            Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                return Err(Error::Config(format!(
                    "{} is locked by another writer (remove {} if that process is gone)",
                    root.display(),
                    lock_path.display()
                )))
            }
            Err(e) => return Err(e.into()),
        }
        let lock = Lock(lock_path);
        let hash = config.hash();
        let cfg_path = root.join(CONFIG_FILE);
        if let Ok(existing) = fs::read_to_string(&cfg_path) {
            let found = stamp_value(&existing, "config_hash").unwrap_or_default();
            if found != hash && !stage_override {
                return Err(Error::ConfigMismatch {
                    path: cfg_path,
                    expected: hash,
                    found,
                });
            }
        }
        let run = Self {
            root: root.to_path_buf(),
            config,
            hash,
            stage_override,
            _lock: lock,
        };
        run.write_text(CONFIG_FILE, &run.config.to_toml())?;
        Ok(run)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// `key: value` comment lines every text artifact starts with.
    pub fn stamp(&self) -> Vec<String> {
        vec![format!("config_hash: {}", self.hash), format!("version: {CODE_VERSION}")]
    }

    /// Write `body` behind `# `-prefixed stamp lines.
    pub fn write_text(&self, rel: &str, body: &str) -> Result<()> {
        let mut s = String::new();
        for l in self.stamp() {
            s.push_str("# ");
            s.push_str(&l);
            s.push('\n');
        }
        s.push_str(body);
        self.write_raw(rel, s.as_bytes())
    }

    pub fn write_raw(&self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        // Write-then-rename so an interrupted stage never leaves a partial artifact.
        let tmp = path.with_extension("partial");
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    /// Read a stamped artifact produced by `stage`, checking its config hash.
    pub fn read_text(&self, stage: &str, rel: &str) -> Result<String> {
        let path = self.require(stage, rel)?;
        let text = fs::read_to_string(&path)?;
        let found = stamp_value(&text, "config_hash").unwrap_or_default();
        if found != self.hash && !self.stage_override {
            return Err(Error::ConfigMismatch {
                path,
                expected: self.hash.clone(),
                found,
            });
        }
        Ok(strip_stamp(&text).to_string())
    }

    /// Path of an artifact that must already exist.
    pub fn require(&self, stage: &str, rel: &str) -> Result<PathBuf> {
        let path = self.path(rel);
        if !path.exists() {
            return Err(Error::MissingPrerequisite {
                stage: stage.to_string(),
                path,
            });
        }
        Ok(path)
    }
}

/// Value of a `# key: value` line among the leading comment lines.
pub fn stamp_value(text: &str, key: &str) -> Option<String> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l.trim_start_matches('#').trim().strip_prefix(key))
        .find_map(|rest| rest.strip_prefix(':').map(|v| v.trim().to_string()))
}

/// `text` without its leading `# ` stamp lines.
pub fn strip_stamp(text: &str) -> &str {
    let mut rest = text;
    while rest.starts_with("# ") {
        match rest.find('\n') {
            Some(i) => rest = &rest[i + 1..],
            None => return "",
        }
    }
    rest
}
