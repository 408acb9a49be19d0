use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use quarton::config::RunConfig;
use serde::Serialize;
use serde_json::{json, Value};

/// A run directory that stamps every file with the resolved config and version.
pub struct RunDir {
    pub path: PathBuf,
    config_text: String,
}

impl RunDir {
    pub fn create(path: PathBuf, cfg: &RunConfig) -> std::io::Result<Self> {
        fs::create_dir_all(&path)?;
        let config_text = cfg.to_text();
        fs::write(path.join("config.cfg"), &config_text)?;
        Ok(Self { path, config_text })
    }

    fn file(&self, name: &str) -> std::io::Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.path.join(name))?))
    }

    /// CSV with the config echoed as `#` comment lines above the header.
    pub fn csv<R: AsRef<[u8]>>(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<R>>) -> std::io::Result<PathBuf> {
        let mut w = self.file(name)?;
        writeln!(w, "# quarton {}", quarton::VERSION)?;
        for line in self.config_text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
            writeln!(w, "# {line}")?;
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(header)?;
        for row in rows {
            out.write_record(row)?;
        }
        out.flush()?;
        Ok(self.path.join(name))
    }

    pub fn json<T: Serialize>(&self, name: &str, payload: &T) -> std::io::Result<PathBuf> {
        let doc = json!({
            "version": quarton::VERSION,
            "config": self.config_text,
            "result": serde_json::to_value(payload)?,
        });
        let mut w = self.file(name)?;
        serde_json::to_writer_pretty(&mut w, &doc)?;
        writeln!(w)?;
        w.flush()?;
        Ok(self.path.join(name))
    }
}

pub fn f(x: f64) -> String {
    format!("{x}")
}

/// Machine-readable error record printed on failure.
pub fn error_record(kind: &str, message: &str, line: Option<usize>, exit_code: i32) -> Value {
    let mut v = json!({ "error": kind, "message": message, "exit_code": exit_code, "version": quarton::VERSION });
    if let Some(l) = line {
        v["line"] = json!(l);
    }
    v
}
