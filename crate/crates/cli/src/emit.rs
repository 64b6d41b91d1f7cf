//! Deterministic artifact writers. Floats print in shortest round-trip form,
//! so identical bits give identical bytes and reruns compare equal.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Per-artifact outcome used for the exit-status decision.
#[derive(Clone, Debug)]
pub struct ArtifactReport {
    pub path: PathBuf,
    pub rows: usize,
    pub error_rows: usize,
}

impl ArtifactReport {
    pub fn error_fraction(&self) -> f64 {
        if self.rows == 0 {
            0.0
        } else {
            self.error_rows as f64 / self.rows as f64
        }
    }
}

/// CSV with a `# config_hash=…` stamp and a column header; rows flush as
/// they land so an interrupted run keeps its partial table.
pub struct Csv {
    writer: BufWriter<File>,
    path: PathBuf,
    rows: usize,
    error_rows: usize,
}

impl Csv {
    pub fn create(path: &Path, hash: &str, columns: &[&str]) -> Result<Csv> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut writer = BufWriter::new(file);
        writeln!(writer, "# config_hash={hash}")?;
        writeln!(writer, "{}", columns.join(","))?;
        Ok(Csv {
            writer,
            path: path.to_path_buf(),
            rows: 0,
            error_rows: 0,
        })
    }

    pub fn row(&mut self, fields: &[String], is_error: bool) -> Result<()> {
        writeln!(self.writer, "{}", fields.join(","))?;
        self.writer.flush()?;
        self.rows += 1;
        if is_error {
            self.error_rows += 1;
        }
        Ok(())
    }

    pub fn finish(self) -> ArtifactReport {
        ArtifactReport {
            path: self.path,
            rows: self.rows,
            error_rows: self.error_rows,
        }
    }
}

pub fn fnum(x: f64) -> String {
    format!("{x}")
}

/// Status cell: commas would split the row, so they become semicolons.
pub fn status_cell(text: &str) -> String {
    text.replace(',', ";")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<ArtifactReport> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value)?;
    writeln!(writer)?;
    writer.flush()?;
    Ok(ArtifactReport {
        path: path.to_path_buf(),
        rows: 1,
        error_rows: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_carries_hash_header_and_counts_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut csv = Csv::create(&path, "deadbeef00000000", &["a", "b"]).unwrap();
        csv.row(&[fnum(1.5), "ok".into()], false).unwrap();
        csv.row(&[fnum(f64::NAN), status_cell("bad, value")], true)
            .unwrap();
        let report = csv.finish();
        assert_eq!(report.rows, 2);
        assert_eq!(report.error_rows, 1);
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# config_hash=deadbeef00000000");
        assert_eq!(lines[1], "a,b");
        assert_eq!(lines[2], "1.5,ok");
        assert_eq!(lines[3], "NaN,bad; value");
    }

    #[test]
    fn shortest_roundtrip_formatting_is_exact() {
        for x in [2.698372, -1.22685, 0.1 + 0.2, 1e-10] {
            let s = fnum(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}
