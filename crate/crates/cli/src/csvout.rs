//! CSV emission: 17 significant digits, '.' decimal, no locale, and a
//! terminating status row on every file so truncated output is detectable.

use anyhow::Context;
use cdlab_core::C64;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Format a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    format!("{v:.16e}")
}

pub struct CsvFile {
    path: PathBuf,
    out: BufWriter<File>,
    finished: bool,
}

impl CsvFile {
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> anyhow::Result<Self> {
        let path = dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", header.join(","))?;
        Ok(CsvFile {
            path,
            out,
            finished: false,
        })
    }

    pub fn row(&mut self, fields: &[String]) -> anyhow::Result<()> {
        writeln!(self.out, "{}", fields.join(","))?;
        Ok(())
    }

    /// Write the terminating status row and flush.
    pub fn finish(mut self, status: &str) -> anyhow::Result<PathBuf> {
        writeln!(self.out, "status,{status}")?;
        self.out.flush()?;
        self.finished = true;
        Ok(self.path.clone())
    }
}

impl Drop for CsvFile {
    fn drop(&mut self) {
        if !self.finished {
            // leave an explicit marker instead of a silently truncated file
            let _ = writeln!(self.out, "status,aborted");
            let _ = self.out.flush();
        }
    }
}

/// Column pair for a complex value.
pub fn complex_fields(v: C64) -> [String; 2] {
    [fmt_f64(v.re), fmt_f64(v.im)]
}
