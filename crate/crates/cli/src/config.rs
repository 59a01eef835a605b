//! Layered option resolution: command-line flag, then config-file key, then
//! built-in default. Config files are `key = value` lines with `#` comments,
//! keys named exactly like the long flags.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

pub const OUT_ENV: &str = "RUNOFF_OUT_DIR";

#[derive(Debug)]
pub struct FileConfig {
    entries: HashMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig {
                entries: HashMap::new(),
            });
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let mut entries = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "{}: line {}: expected `key = value`, got {raw:?}",
                    path.display(),
                    idx + 1
                );
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { entries })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(text) => text
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("config key {key} = {text:?}: {e}")),
        }
    }
}

/// Flag beats config file beats `default`.
pub fn pick<T: FromStr>(flag: Option<T>, file: &FileConfig, key: &str, default: T) -> Result<T>
where
    T::Err: Display,
{
    match flag {
        Some(v) => Ok(v),
        None => Ok(file.get(key)?.unwrap_or(default)),
    }
}

/// Flag or config key; `None` when neither is given.
pub fn pick_opt<T: FromStr>(flag: Option<T>, file: &FileConfig, key: &str) -> Result<Option<T>>
where
    T::Err: Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

/// Flag or config key, with no default to fall back on.
pub fn pick_required<T: FromStr>(flag: Option<T>, file: &FileConfig, key: &str) -> Result<T>
where
    T::Err: Display,
{
    match flag {
        Some(v) => Ok(v),
        None => file
            .get(key)?
            .ok_or_else(|| anyhow!("missing --{key} (flag or config key)")),
    }
}

/// Output root: `-o` flag, config `out`, $RUNOFF_OUT_DIR, `./runs`.
pub fn pick_out_root(flag: Option<PathBuf>, file: &FileConfig) -> Result<PathBuf> {
    if let Some(v) = flag {
        return Ok(v);
    }
    if let Some(v) = file.get::<PathBuf>("out")? {
        return Ok(v);
    }
    match std::env::var(OUT_ENV) {
        Ok(v) if !v.is_empty() => Ok(PathBuf::from(v)),
        _ => Ok(PathBuf::from("runs")),
    }
}
