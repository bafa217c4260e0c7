use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Writes output files stamped with the library version and config hash.
pub struct Artifacts {
    dir: PathBuf,
    hash: String,
    command: &'static str,
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    version: &'a str,
    config_hash: &'a str,
    command: &'a str,
    result: &'a T,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("cannot write {}: {e}", path.display()))
}

impl Artifacts {
    pub fn new(dir: &Path, hash: String, command: &'static str) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), hash, command })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn stamp(&self) -> String {
        format!("# varpremia {} config_sha256={} command={}", varpremia::VERSION, self.hash, self.command)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, result: &T) -> CliResult<PathBuf> {
        let path = self.path(name);
        let env = Envelope { version: varpremia::VERSION, config_hash: &self.hash, command: self.command, result };
        let mut text = serde_json::to_string_pretty(&env).map_err(|e| io_err(&path, e))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    /// CSV with a `#` comment line carrying the stamp, then a header row.
    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<PathBuf> {
        let path = self.path(name);
        let mut buf = Vec::new();
        writeln!(buf, "{}", self.stamp()).map_err(|e| io_err(&path, e))?;
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header).map_err(|e| io_err(&path, e))?;
            for r in rows {
                w.write_record(r).map_err(|e| io_err(&path, e))?;
            }
            w.flush().map_err(|e| io_err(&path, e))?;
        }
        std::fs::write(&path, buf).map_err(|e| io_err(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }
}

/// Reads JSON that is either `T` itself or an artifact whose `result` (or `result.<field>`) is `T`.
pub fn read_json_or_artifact<T: serde::de::DeserializeOwned>(path: &Path, field: &str) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let candidates = [v.get("result").and_then(|r| r.get(field)), v.get("result"), Some(&v)];
    let mut last = String::new();
    for c in candidates.into_iter().flatten() {
        match serde_json::from_value::<T>(c.clone()) {
            Ok(t) => return Ok(t),
            Err(e) => last = e.to_string(),
        }
    }
    Err(CliError::Data(format!("{}: no usable '{field}' ({last})", path.display())))
}

pub fn num(x: f64) -> String {
    format!("{x}")
}
