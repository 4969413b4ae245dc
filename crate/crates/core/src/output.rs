//! CSV, metadata sidecar and manifest writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kmc::EnsembleProfile;
use crate::pde::DensityField;

/// Extension of metadata sidecars; they carry wall times and stay out of the manifest.
pub const SIDECAR_EXT: &str = "meta";
pub const MANIFEST_NAME: &str = "MANIFEST.sha256";

fn header(cells: usize, stderr: bool) -> String {
    let mut h = String::from("time");
    for i in 0..cells {
        write!(h, ",cell_{i}").unwrap();
    }
    if stderr {
        for i in 0..cells {
            write!(h, ",stderr_{i}").unwrap();
        }
    }
    h.push('\n');
    h
}

/// `time,cell_0,...,cell_{K-1}` rows.
pub fn trajectory_csv(rows: &[(f64, DensityField)]) -> String {
    let cells = rows.first().map_or(0, |r| r.1.len());
    let mut out = header(cells, false);
    for (t, f) in rows {
        write!(out, "{t}").unwrap();
        for v in f.cells() {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Trajectory rows followed by `stderr_i` columns.
pub fn ensemble_csv(profile: &EnsembleProfile) -> String {
    let cells = profile.mean.first().map_or(0, |f| f.len());
    let mut out = header(cells, true);
    for ((t, mean), se) in profile.times.iter().zip(&profile.mean).zip(&profile.stderr) {
        write!(out, "{t}").unwrap();
        for v in mean.cells().iter().chain(se) {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Plain `key = value` lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.push(key, value);
        self
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|e| e.0 == key).map(|e| e.1.as_str())
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash every regular file in `dir` except sidecars and the manifest itself,
/// and write `<hash>  <name>` lines sorted by name.
pub fn write_manifest(dir: &Path) -> Result<PathBuf> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().into_owned();
        let skip = name == MANIFEST_NAME
            || path.extension().is_some_and(|e| e == SIDECAR_EXT)
            || !path.is_file();
        if !skip {
            names.push(name);
        }
    }
    names.sort();
    let mut out = String::new();
    for name in names {
        let path = dir.join(&name);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        writeln!(out, "{}  {name}", sha256_hex(&bytes)).unwrap();
    }
    let path = dir.join(MANIFEST_NAME);
    write_file(&path, &out)?;
    Ok(path)
}
