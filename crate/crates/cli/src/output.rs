use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Artifacts written by one run, removed again if the run fails.
pub struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<PathBuf>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Outputs { dir: dir.to_path_buf(), created_dir, files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Registers a file written by someone else.
    pub fn track(&mut self, p: PathBuf) {
        self.files.push(p);
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
        self.track(p);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.text(name, &body)
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    pub fn discard(self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if self.created_dir {
            // only succeeds when nothing else landed there
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

/// Comma-separated table with a header line.
pub struct Csv {
    body: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { body: header.join(",") + "\n" }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.body.push_str(&cells.join(","));
        self.body.push('\n');
    }

    pub fn finish(self) -> String {
        self.body
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discard_removes_what_was_written() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("run");
        let mut out = Outputs::create(&dir).unwrap();
        out.text("a.csv", "x\n").unwrap();
        out.json("b.json", &[1, 2]).unwrap();
        assert_eq!(out.files().len(), 2);
        out.discard();
        assert!(!dir.exists());
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&["a", "b"]);
        c.row(&["1".into(), "2.5".into()]);
        assert_eq!(c.finish(), "a,b\n1,2.5\n");
    }
}
