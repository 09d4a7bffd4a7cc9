use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::SimConfig;

/// Nine significant digits; non-finite values spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.8e}")
    }
}

/// CSV file whose first lines are `#` comments carrying the command and the
/// full configuration.
pub struct CsvFile {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvFile {
    pub fn create(
        dir: &Path,
        name: &str,
        command: &str,
        config: &SimConfig,
        columns: &[&str],
    ) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(name);
        let mut out = BufWriter::new(File::create(&path)?);
        writeln!(out, "# ratelessnet {command}")?;
        for line in config.to_toml().lines() {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "{}", columns.join(","))?;
        Ok(Self { path, out })
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) -> std::io::Result<()> {
        let mut first = true;
        for f in fields {
            if !first {
                self.out.write_all(b",")?;
            }
            first = false;
            self.out.write_all(f.as_ref().as_bytes())?;
        }
        self.out.write_all(b"\n")
    }

    pub fn finish(mut self) -> std::io::Result<PathBuf> {
        self.out.flush()?;
        Ok(self.path)
    }
}
