//! CSV rendering and atomic file output.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use tempfile::NamedTempFile;

use crate::CliError;

/// Comma-separated table with a header row; numbers carry 17 significant digits.
pub struct Table {
    text: String,
    width: usize,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { text: format!("{}\n", header.join(",")), width: header.len() }
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.width);
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                self.text.push(',');
            }
            write!(self.text, "{v:.16e}").expect("writing to a String");
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Writes next to the destination and renames, so a failed run leaves no
/// partial file behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Sends the table to `path`, or to stdout when no path is given.
pub fn emit(table: &Table, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, table.as_str()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(table.as_str().as_bytes()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}
