//! Result files and the run manifest.
//!
//! Every write goes through one [`OutputDir`], owned by the main thread,
//! so file contents never depend on worker scheduling.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const MANIFEST: &str = "manifest.json";

/// Shortest round-trip decimal; `NaN`, `inf`, `-inf` for the rest.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Sorted parameter tuple of the grid point.
    pub key: Vec<f64>,
    pub label: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub artifact_version: String,
    pub experiment: String,
    /// SHA-256 of the canonical config JSON.
    pub config_hash: String,
    pub started_at: String,
    pub finished_at: String,
    pub runs: Vec<RunRecord>,
    /// Non-fatal problems, such as a figure that could not be drawn.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Paths relative to the output directory, sorted; includes the manifest.
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn failed(&self) -> usize {
        self.runs.iter().filter(|r| r.status == RunStatus::Failed).count()
    }
}

pub struct OutputDir {
    root: PathBuf,
    files: BTreeSet<String>,
}

impl OutputDir {
    /// Creates the directory. A directory left by an earlier run is cleaned
    /// of the files its manifest lists; any other content is refused.
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let old = root.join(MANIFEST);
        if old.exists() {
            let text = fs::read_to_string(&old)?;
            let m: RunManifest = serde_json::from_str(&text).context("reading the previous manifest")?;
            for f in &m.files {
                let p = root.join(f);
                if p.is_file() {
                    fs::remove_file(&p)?;
                }
            }
            prune_empty_dirs(root)?;
        }
        let leftovers = list_files(root)?;
        if !leftovers.is_empty() {
            bail!("output directory {} holds files not produced by a run: {}", root.display(), leftovers.join(", "));
        }
        Ok(Self { root: root.to_path_buf(), files: BTreeSet::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Files written so far, relative and sorted.
    pub fn written(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(String::as_str)
    }

    /// Registers a file written by someone else, returning its full path.
    pub fn claim(&mut self, rel: &str) -> Result<PathBuf> {
        self.target(rel)
    }

    fn target(&mut self, rel: &str) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        self.files.insert(rel.to_string());
        Ok(path)
    }

    pub fn write_csv(&mut self, rel: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.target(rel)?;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let path = self.target(rel)?;
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn write_text(&mut self, rel: &str, text: &str) -> Result<()> {
        let path = self.target(rel)?;
        fs::write(path, text)?;
        Ok(())
    }

    /// Writes the manifest last, listing itself.
    pub fn finish(mut self, mut manifest: RunManifest) -> Result<RunManifest> {
        self.files.insert(MANIFEST.to_string());
        manifest.files = self.files.iter().cloned().collect();
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.root.join(MANIFEST), text)?;
        Ok(manifest)
    }
}

/// Every regular file below `root`, relative and sorted.
pub fn list_files(root: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.push(rel);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn prune_empty_dirs(dir: &Path) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            prune_empty_dirs(&p)?;
            if fs::read_dir(&p)?.next().is_none() {
                fs::remove_dir(&p)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_cells() {
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(1e-8), "0.00000001");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
        assert_eq!(fmt_opt(None), "");
        let x = 0.1 + 0.2;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn rerun_replaces_own_files_only() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("out");
        let mut d = OutputDir::create(&root).unwrap();
        d.write_csv("a/b.csv", &["x"], &[vec!["1".into()]]).unwrap();
        let m = RunManifest {
            artifact: "t".into(),
            artifact_version: "0".into(),
            experiment: "pencil".into(),
            config_hash: String::new(),
            started_at: String::new(),
            finished_at: String::new(),
            runs: vec![],
            warnings: vec![],
            files: vec![],
        };
        let m = d.finish(m).unwrap();
        assert_eq!(m.files, vec!["a/b.csv".to_string(), MANIFEST.to_string()]);
        assert_eq!(list_files(&root).unwrap(), m.files);
        assert!(OutputDir::create(&root).is_ok());
        assert!(list_files(&root).unwrap().is_empty());
        fs::write(root.join("stray.txt"), "x").unwrap();
        assert!(OutputDir::create(&root).is_err());
    }
}
