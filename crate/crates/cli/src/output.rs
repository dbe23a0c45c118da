//! Column files, JSON reports and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(OutputDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }

    fn write(&mut self, name: &str, body: &str) -> anyhow::Result<()> {
        let path = self.root.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.write(name, &body)
    }

    /// Tab-separated columns under a single header line.
    pub fn columns(&mut self, name: &str, header: &[&str], cols: &[&[f64]]) -> anyhow::Result<()> {
        let rows = cols.first().map_or(0, |c| c.len());
        let mut body = header.join("\t");
        body.push('\n');
        for r in 0..rows {
            for (j, c) in cols.iter().enumerate() {
                if j > 0 {
                    body.push('\t');
                }
                write!(body, "{}", c[r])?;
            }
            body.push('\n');
        }
        self.write(name, &body)
    }
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// `manifest.json`: provenance plus command-specific counts.
pub struct Manifest {
    pub command: &'static str,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
    pub extra: Map<String, Value>,
}

impl Manifest {
    pub fn write(self, out: &mut OutputDir) -> anyhow::Result<()> {
        let mut m = Map::new();
        m.insert("command".into(), self.command.into());
        m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        m.insert("config_sha256".into(), self.config_sha256.into());
        m.insert("seed".into(), self.seed.map_or(Value::Null, Value::from));
        m.insert("rng".into(), jumplaw::rng::ALGORITHM.into());
        m.insert("wall_time_s".into(), self.wall_time_s.into());
        m.insert("outputs".into(), out.files().to_vec().into());
        for (k, v) in self.extra {
            m.insert(k, v);
        }
        out.json("manifest.json", &Value::Object(m))
    }
}
