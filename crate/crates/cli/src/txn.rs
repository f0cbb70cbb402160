//! All-or-nothing replacement of several output files.

use std::fs;
use std::path::{Path, PathBuf};

use alframe_core::io::atomic_write;

use crate::error::{CliError, CliResult};

#[derive(Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, path: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((path.into(), bytes));
    }

    /// Writes every file atomically in order. If one fails, files already
    /// written are restored to their previous contents (or removed).
    pub fn commit(self) -> CliResult<()> {
        let mut done: Vec<(&Path, Option<Vec<u8>>)> = Vec::new();
        for (path, bytes) in &self.files {
            let previous = match fs::read(path) {
                Ok(b) => Some(b),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
                Err(e) => {
                    rollback(&done);
                    return Err(CliError::io(path, e));
                }
            };
            if let Err(e) = atomic_write(path, bytes) {
                rollback(&done);
                return Err(e.into());
            }
            done.push((path, previous));
        }
        Ok(())
    }
}

fn rollback(done: &[(&Path, Option<Vec<u8>>)]) {
    for (path, previous) in done.iter().rev() {
        let _ = match previous {
            Some(b) => atomic_write(path, b).map_err(|_| ()),
            None => fs::remove_file(path).map_err(|_| ()),
        };
    }
}
