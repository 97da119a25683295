//! Work-directory lock: one pipeline command at a time.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const LOCK_NAME: &str = ".coldrec.lock";

/// Held for the duration of a command; the lock file is removed on drop.
#[derive(Debug)]
pub struct WorkLock {
    path: PathBuf,
}

impl WorkLock {
    pub fn acquire(work_dir: &Path) -> Result<WorkLock> {
        std::fs::create_dir_all(work_dir).map_err(|e| Error::io(work_dir, e))?;
        let path = work_dir.join(LOCK_NAME);
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(mut file) => {
                let _ = writeln!(file, "{}", std::process::id());
                Ok(WorkLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(Error::Locked(path))
            }
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for WorkLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_acquire_fails_until_release() {
        let dir = tempfile::tempdir().unwrap();
        let lock = WorkLock::acquire(dir.path()).unwrap();
        assert!(matches!(
            WorkLock::acquire(dir.path()),
            Err(Error::Locked(_))
        ));
        drop(lock);
        let again = WorkLock::acquire(dir.path()).unwrap();
        drop(again);
    }
}
