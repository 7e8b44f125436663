use std::fs::{self, File, OpenOptions, TryLockError};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cbr_core::config::EngineConfig;
use cbr_core::library::CaseLibrary;
use cbr_core::persist::parse_library;

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Writes via a temporary file in the target directory and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Exclusive advisory lock held for as long as the returned file lives.
pub struct WriteLock {
    _file: File,
}

pub fn lock_for_write(path: &Path) -> Result<WriteLock> {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".lock");
    let lock_path = path.with_file_name(name);
    let file = OpenOptions::new()
        .create(true)
        .truncate(false)
        .write(true)
        .open(&lock_path)
        .with_context(|| format!("opening {}", lock_path.display()))?;
    match file.try_lock() {
        Ok(()) => Ok(WriteLock { _file: file }),
        Err(TryLockError::WouldBlock) => bail!("{} is locked by another process", path.display()),
        Err(TryLockError::Error(e)) => Err(e).with_context(|| format!("locking {}", lock_path.display())),
    }
}

pub fn load_config(path: Option<&Path>) -> Result<(EngineConfig, Option<PathBuf>)> {
    match path {
        None => Ok((EngineConfig::default(), None)),
        Some(p) => {
            let cfg = EngineConfig::parse(&read(p)?).with_context(|| format!("in config {}", p.display()))?;
            let rules = cfg.rules.as_ref().map(|r| p.parent().unwrap_or(Path::new(".")).join(r));
            Ok((cfg, rules))
        }
    }
}

pub fn load_library(path: &Path, cfg: &EngineConfig) -> Result<CaseLibrary> {
    parse_library(&read(path)?, &cfg.embedder).with_context(|| format!("in library {}", path.display()))
}
