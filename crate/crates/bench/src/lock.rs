//! One-process ownership of a run directory via a lock file.

use std::path::{Path, PathBuf};

use crate::CliError;

pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    /// Creates the directory if needed and claims it. Fails when another
    /// process (or a crashed run) holds the lock.
    pub fn acquire(dir: &Path) -> Result<DirLock, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join("LOCK");
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(mut f) => {
                use std::io::Write;
                let _ = writeln!(f, "{}", std::process::id());
                Ok(DirLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Config(
                format!(
                    "run directory {} is locked (stale LOCK file from a crashed run? remove it to proceed)",
                    dir.display()
                ),
            )),
            Err(e) => Err(CliError::Data(format!(
                "cannot create lock in {}: {e}",
                dir.display()
            ))),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
