use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use esa_core::trace::CsvTable;

use crate::config::ExperimentConfig;

/// Output directory: `out_dir` from the config, else `out/<name>`.
pub fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out").join(&cfg.name))
}

pub struct Writer {
    pub dir: PathBuf,
    hash: String,
    pub files: Vec<PathBuf>,
}

impl Writer {
    pub fn create(cfg: &ExperimentConfig) -> Result<Self> {
        let dir = out_dir(cfg);
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir, hash: cfg.hash(), files: Vec::new() })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn csv(&mut self, name: &str, table: CsvTable) -> Result<PathBuf> {
        let mut t = table;
        t.comments.insert(0, format!("config_hash={}", self.hash));
        let path = self.dir.join(name);
        t.write(&path).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

pub fn curve_file(variant: &str, seed: u64) -> String {
    format!("curves_{variant}_{seed}.csv")
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    CsvTable::parse(&text).with_context(|| format!("{} is not a CSV table", path.display()))
}
