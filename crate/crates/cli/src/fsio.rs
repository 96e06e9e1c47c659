//! Atomic file output and plain-text numeric tables.
//!
//! Every artifact is written to a temporary file in the destination
//! directory and renamed into place, so readers never observe a partial
//! file and interrupted runs leave the previous artifact intact.

use crate::errors::CliError;
use std::path::{Path, PathBuf};

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).ok_or_else(|| {
        CliError::Data(format!("cannot derive a file name from {}", path.display()))
    })?;
    let tmp = dir.join(format!(".{name}.tmp.{}", std::process::id()));
    let io = |e: std::io::Error, p: &Path| CliError::Data(format!("{}: {e}", p.display()));
    std::fs::write(&tmp, bytes).map_err(|e| io(e, &tmp))?;
    std::fs::rename(&tmp, path).map_err(|e| io(e, path))
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Parses a whitespace-separated numeric table, skipping blank lines and
/// `#` comments. Every row must have `cols` fields.
pub fn read_table(path: &Path, cols: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != cols {
            return Err(CliError::Data(format!(
                "{}:{}: expected {cols} fields, found {}",
                path.display(),
                n + 1,
                fields.len()
            )));
        }
        let mut row = Vec::with_capacity(cols);
        for f in fields {
            row.push(f.parse::<f64>().map_err(|_| {
                CliError::Data(format!(
                    "{}:{}: `{f}` is not a number",
                    path.display(),
                    n + 1
                ))
            })?);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Formats a numeric table with a `#` header, shortest round-trip floats.
pub fn format_table(header: &str, rows: &[Vec<f64>]) -> String {
    let mut s = format!("# {header}\n");
    for row in rows {
        let line = row.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        s.push_str(&line);
        s.push('\n');
    }
    s
}

/// Sorted `.txt` file listing of a directory.
pub fn list_txt(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let rd = std::fs::read_dir(dir)
        .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let mut names = Vec::new();
    for entry in rd {
        let entry = entry.map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
        let p = entry.path();
        if p.extension().and_then(|x| x.to_str()) == Some("txt") && p.is_file() {
            names.push(p);
        }
    }
    names.sort();
    Ok(names)
}
