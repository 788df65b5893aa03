//! Plain-text output helpers: CSV with `\n` line endings and 17 significant
//! digits for reals.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// A real with 17 significant digits, `.` decimal separator.
pub fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Minimal CSV writer: a header row followed by data rows.
#[derive(Debug, Default)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        write_line(&mut out, &self.header);
        for row in &self.rows {
            write_line(&mut out, row);
        }
        out
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(self.render().as_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.render().as_bytes())
    }
}

fn write_line(out: &mut String, cells: &[String]) {
    for (i, c) in cells.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        if c.contains([',', '"', '\n']) {
            out.push('"');
            out.push_str(&c.replace('"', "\"\""));
            out.push('"');
        } else {
            out.push_str(c);
        }
    }
    out.push('\n');
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_real(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_real(1.0 / 3.0).split('e').next().unwrap().len(), 18);
        assert_eq!(fmt_real(f64::INFINITY), "inf");
    }

    #[test]
    fn quoting() {
        let mut t = CsvTable::new(["a", "b"]);
        t.push(vec!["x,y".into(), "1".into()]);
        assert_eq!(t.render(), "a,b\n\"x,y\",1\n");
    }
}
