//! Output-directory lock and the per-iteration table.

use std::fs::{self, File, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use fecvx::adaptivity::IterationRecord;

use crate::CliError;

pub const LOCK_FILE: &str = ".fecvx.lock";
pub const TABLE_HEADER: &str = "iteration,elements,dofs,wall_seconds,l2_error,linf_error";

/// Held for the lifetime of a run; removes the lock file on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(DirLock { path })
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(CliError::Locked(dir.to_path_buf())),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Six significant digits.
pub fn sig6(v: f64) -> String {
    format!("{v:.5e}")
}

pub fn write_table(path: &Path, records: &[IterationRecord]) -> Result<(), CliError> {
    let mut f = File::create(path)?;
    writeln!(f, "{TABLE_HEADER}")?;
    for r in records {
        let (l2, linf) = match r.errors {
            Some(e) => (sig6(e.l2), sig6(e.linf)),
            None => (String::new(), String::new()),
        };
        writeln!(
            f,
            "{},{},{},{},{l2},{linf}",
            r.iteration + 1,
            r.elements,
            r.dofs,
            sig6(r.wall_seconds)
        )?;
    }
    Ok(())
}
