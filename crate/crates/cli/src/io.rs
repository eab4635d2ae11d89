//! Atomic file output, CSV formatting and matrix dump files.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use polykin_core::linearized_operator::{read_dump, write_dump, BlockOperator, DumpError, MatrixKind};
use serde::Serialize;

fn temp_path(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp.{}", std::process::id()))
}

/// Writes through `fill` into a temporary sibling and renames it over `path`.
pub fn write_atomic_with(path: &Path, fill: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let tmp = temp_path(path);
    let result = (|| -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(&tmp)?);
        fill(&mut w)?;
        let file = w.into_inner().map_err(|e| e.into_error())?;
        file.sync_all()
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(e).with_context(|| format!("writing {}", path.display()));
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic_with(path, |w| w.write_all(bytes))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// A float with 17 significant digits, enough to round-trip every f64.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comma-separated rows under a header, LF line endings.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    text: String,
}

pub enum Cell {
    Float(f64),
    Int(usize),
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        let line: Vec<String> = cells
            .iter()
            .map(|c| match c {
                Cell::Float(x) => fmt_float(*x),
                Cell::Int(k) => k.to_string(),
            })
            .collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

pub fn dump_path(dir: &Path, kind: MatrixKind) -> PathBuf {
    dir.join(format!("{}.bin", kind.file_stem()))
}

pub fn save_dump(dir: &Path, kind: MatrixKind, m: &BlockOperator) -> Result<PathBuf> {
    let path = dump_path(dir, kind);
    write_atomic_with(&path, |w| write_dump(w, kind, m))?;
    Ok(path)
}

/// Reads a dump and checks that it holds the expected operator.
pub fn load_dump(dir: &Path, kind: MatrixKind) -> Result<BlockOperator> {
    let path = dump_path(dir, kind);
    let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
    let (found, m) = read_dump(&mut BufReader::new(file)).map_err(|e: DumpError| anyhow::anyhow!("{}: {e}", path.display()))?;
    anyhow::ensure!(
        found == kind,
        "{} holds {:?}, expected {:?}",
        path.display(),
        found,
        kind
    );
    Ok(m)
}
