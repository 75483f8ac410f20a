//! Run manifests and output bookkeeping.
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use dnls_core::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub spacing: f64,
}

impl GridSpec {
    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::new(self.half_width, self.spacing)?)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        GridSpec {
            half_width: g.half_width(),
            spacing: g.spacing(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|value − target| ≤ tolerance`.
    Within,
    /// `value ≤ target`.
    AtMost,
    /// `value ≥ target`.
    AtLeast,
}

/// One quantitative acceptance check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub criterion_id: String,
    pub label: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn within(
        id: &str,
        label: impl Into<String>,
        value: f64,
        target: f64,
        tolerance: f64,
    ) -> Self {
        Check {
            criterion_id: id.into(),
            label: label.into(),
            value,
            target,
            tolerance,
            relation: Relation::Within,
            pass: (value - target).abs() <= tolerance,
        }
    }

    pub fn at_most(id: &str, label: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            criterion_id: id.into(),
            label: label.into(),
            value,
            target: bound,
            tolerance: 0.0,
            relation: Relation::AtMost,
            pass: value <= bound,
        }
    }

    pub fn at_least(id: &str, label: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            criterion_id: id.into(),
            label: label.into(),
            value,
            target: bound,
            tolerance: 0.0,
            relation: Relation::AtLeast,
            pass: value >= bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: serde_json::Value,
    pub grid: Option<GridSpec>,
    pub version: String,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputFile>,
    /// SHA-256 over the output names and their hashes, in write order.
    pub output_hash: String,
    #[serde(default)]
    pub checks: Vec<Check>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects the files of one run and writes its manifest.
#[derive(Debug)]
pub struct Outputs {
    subcommand: String,
    dir: PathBuf,
    manifest: PathBuf,
    files: Vec<OutputFile>,
    started: Instant,
}

impl Outputs {
    /// Outputs under `dir`, manifest at `dir/<subcommand>.manifest.json`.
    pub fn in_dir(subcommand: &str, dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Outputs {
            subcommand: subcommand.into(),
            dir: dir.to_path_buf(),
            manifest: dir.join(format!("{subcommand}.manifest.json")),
            files: Vec::new(),
            started: Instant::now(),
        })
    }

    /// Outputs next to `file`, manifest at `<file>.manifest.json`.
    pub fn beside(subcommand: &str, file: &Path) -> Result<Self> {
        let dir = file
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut name = file
            .file_name()
            .context("output path has no file name")?
            .to_os_string();
        name.push(".manifest.json");
        Ok(Outputs {
            subcommand: subcommand.into(),
            dir: dir.to_path_buf(),
            manifest: dir.join(name),
            files: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(OutputFile {
            path: name.into(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(
        self,
        parameters: serde_json::Value,
        grid: Option<GridSpec>,
        seed: Option<u64>,
        checks: Vec<Check>,
    ) -> Result<RunManifest> {
        let mut all = Sha256::new();
        for f in &self.files {
            all.update(f.path.as_bytes());
            all.update(f.sha256.as_bytes());
        }
        let output_hash = all.finalize().iter().map(|b| format!("{b:02x}")).collect();
        let manifest = RunManifest {
            subcommand: self.subcommand,
            parameters,
            grid,
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            outputs: self.files,
            output_hash,
            checks,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&self.manifest, text)
            .with_context(|| format!("writing {}", self.manifest.display()))?;
        Ok(manifest)
    }
}

/// Reads every `*.manifest.json` directly under `dir`, sorted by file name.
pub fn read_manifests(dir: &Path) -> Result<Vec<RunManifest>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".manifest.json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .collect()
}

/// CSV with a header line and `{:.16e}` cells.
pub fn csv<I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator,
    I::Item: AsRef<[f64]>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
