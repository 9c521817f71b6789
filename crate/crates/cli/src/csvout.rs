//! CSV artifact writer. Every file starts with comment lines carrying the
//! configuration fingerprint and the run seed, then a column header; rows
//! are plain comma-joined fields. Formatting is deterministic, so reruns of
//! the same configuration produce byte-identical files.

use anyhow::{Context, Result};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub struct CsvWriter {
    w: BufWriter<File>,
    columns: usize,
}

impl CsvWriter {
    pub fn create(path: &Path, config_hash: u64, seed: u64, columns: &[&str]) -> Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "# config_hash={config_hash:016x}")?;
        writeln!(w, "# seed={seed}")?;
        writeln!(w, "{}", columns.join(","))?;
        Ok(Self {
            w,
            columns: columns.len(),
        })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        assert_eq!(fields.len(), self.columns, "column count mismatch");
        writeln!(self.w, "{}", fields.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

/// Formats a float with shortest round-trip representation; integers of any
/// width go through `ToString`.
pub fn f(v: f64) -> String {
    format!("{v}")
}
