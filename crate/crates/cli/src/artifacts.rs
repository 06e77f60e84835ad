//! Run outputs are held in memory and written in one pass at the end, so a
//! failed computation leaves nothing behind. If writing itself fails, every
//! file and directory created so far is removed again.

use std::fs;
use std::io::Write;
use std::path::{Component, Path, PathBuf};

use crate::error::{CliError, Result};

#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Artifacts {
    /// Queue `bytes` for `rel`, a plain relative path inside the output
    /// directory.
    pub fn add(&mut self, rel: impl Into<PathBuf>, bytes: Vec<u8>) {
        let rel = rel.into();
        assert!(
            rel.components().all(|c| matches!(c, Component::Normal(_))),
            "artifact path must stay inside the output directory: {}",
            rel.display()
        );
        self.files.retain(|(p, _)| *p != rel);
        self.files.push((rel, bytes));
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    /// Write everything under `dir`.
    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut created = Created::default();
        match self.write_all(dir, &mut created) {
            Ok(()) => Ok(created.files),
            Err(e) => {
                created.roll_back();
                Err(CliError::config(format!("output_dir `{}`: {e}", dir.display())))
            }
        }
    }

    fn write_all(&self, dir: &Path, created: &mut Created) -> std::io::Result<()> {
        created.dir_all(dir)?;
        for (rel, bytes) in &self.files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                created.dir_all(parent)?;
            }
            let mut f = fs::File::create(&path)?;
            created.files.push(path);
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        Ok(())
    }
}

/// Check up front that `dir` can be created and written to, leaving no
/// trace.
pub fn probe(dir: &Path) -> Result<()> {
    let mut created = Created::default();
    let res = created.dir_all(dir).and_then(|()| {
        let probe = dir.join(".lfi-write-probe");
        fs::File::create(&probe)?;
        fs::remove_file(&probe)
    });
    created.roll_back();
    res.map_err(|e| CliError::config(format!("output_dir `{}` is not writable: {e}", dir.display())))
}

#[derive(Default)]
struct Created {
    dirs: Vec<PathBuf>,
    files: Vec<PathBuf>,
}

impl Created {
    fn dir_all(&mut self, dir: &Path) -> std::io::Result<()> {
        let mut missing = Vec::new();
        let mut cur = Some(dir);
        while let Some(d) = cur {
            if d.as_os_str().is_empty() || d.exists() {
                break;
            }
            missing.push(d.to_path_buf());
            cur = d.parent();
        }
        for d in missing.into_iter().rev() {
            fs::create_dir(&d)?;
            self.dirs.push(d);
        }
        Ok(())
    }

    fn roll_back(&mut self) {
        for f in self.files.drain(..).rev() {
            let _ = fs::remove_file(f);
        }
        for d in self.dirs.drain(..).rev() {
            let _ = fs::remove_dir(d);
        }
    }
}
