//! Delimited-text helpers shared by every reader and writer.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{DscError, Result};

/// Formats a number with 9 significant digits, shortest representation.
/// Infinities are written as `inf` / `-inf`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    let s = format!("{rounded}");
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// Parses a number written by [`fmt_num`] (or any float literal).
pub fn parse_num(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        other => other.parse().ok(),
    }
}

pub struct CsvOut {
    writer: BufWriter<File>,
    path: std::path::PathBuf,
}

impl CsvOut {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|e| DscError::io(parent, e))?;
            }
        }
        let file = File::create(path).map_err(|e| DscError::io(path, e))?;
        let mut out = CsvOut { writer: BufWriter::new(file), path: path.to_path_buf() };
        out.row(header.iter().map(|h| h.to_string()))?;
        Ok(out)
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let line = fields.into_iter().map(|f| f.as_ref().to_string()).collect::<Vec<_>>().join(",");
        writeln!(self.writer, "{line}").map_err(|e| DscError::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| DscError::io(&self.path, e))
    }
}

/// A parsed delimited file with a header row.
pub struct Table {
    pub path: std::path::PathBuf,
    pub header: Vec<String>,
    pub rows: Vec<csv::StringRecord>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Table> {
        if !path.exists() {
            return Err(DscError::MissingFile(path.to_path_buf()));
        }
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| DscError::parse(path, e))?;
        let header =
            reader.headers().map_err(|e| DscError::parse(path, e))?.iter().map(|h| h.to_ascii_lowercase()).collect();
        let rows =
            reader.records().collect::<std::result::Result<Vec<_>, _>>().map_err(|e| DscError::parse(path, e))?;
        Ok(Table { path: path.to_path_buf(), header, rows })
    }

    /// Index of the first header matching any of `names`.
    pub fn column(&self, names: &[&str]) -> Option<usize> {
        names.iter().find_map(|n| self.header.iter().position(|h| h == n))
    }

    pub fn require(&self, names: &[&str]) -> Result<usize> {
        self.column(names)
            .ok_or_else(|| DscError::parse(&self.path, format!("missing column (expected one of {})", names.join("/"))))
    }

    pub fn f64_at(&self, row: usize, col: usize) -> Result<f64> {
        let raw = self.rows[row].get(col).unwrap_or("");
        parse_num(raw).ok_or_else(|| DscError::parse(&self.path, format!("row {}: bad number {raw:?}", row + 2)))
    }

    pub fn usize_at(&self, row: usize, col: usize) -> Result<usize> {
        let raw = self.rows[row].get(col).unwrap_or("");
        raw.parse().map_err(|_| DscError::parse(&self.path, format!("row {}: bad integer {raw:?}", row + 2)))
    }

    pub fn str_at(&self, row: usize, col: usize) -> &str {
        self.rows[row].get(col).unwrap_or("")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_num(6e6), "6000000");
        assert_eq!(fmt_num(0.1), "0.1");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(123456789012.0), "123456789000");
        assert_eq!(parse_num("inf"), Some(f64::INFINITY));
    }

    #[test]
    fn formatting_is_idempotent() {
        for x in [std::f64::consts::PI, 1e-7 / 3.0, 2.0 / 7.0 * 1e12] {
            let once = fmt_num(x);
            assert_eq!(fmt_num(parse_num(&once).unwrap()), once);
        }
    }
}
