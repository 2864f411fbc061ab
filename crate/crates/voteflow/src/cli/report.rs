//! Report assembly and emission: CSV tables (RFC-4180 via the csv crate),
//! a machine-readable JSON summary, and a plain-text digest. Emission is
//! deterministic: same spec, same bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::{Error, Result};

/// One named CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Everything one command run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
    pub tables: Vec<Table>,
    /// Extra binary artifacts, as (relative path, bytes).
    pub blobs: Vec<(String, Vec<u8>)>,
    pub summary: Value,
    pub digest: String,
}

impl ReportBundle {
    pub fn new(command: &str, config_hash: &str, seed: u64) -> Self {
        ReportBundle {
            command: command.to_string(),
            config_hash: config_hash.to_string(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            tables: Vec::new(),
            blobs: Vec::new(),
            summary: Value::Null,
            digest: String::new(),
        }
    }

    fn provenance(&self) -> Value {
        serde_json::json!({
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "tool_version": self.tool_version,
        })
    }

    /// Writes `<name>.csv` per table, `summary.json`, and `digest.txt`
    /// into `out_dir`, creating it if needed. Returns the written paths.
    pub fn emit(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(out_dir)?;
        let mut written = Vec::new();

        for table in &self.tables {
            let path = out_dir.join(format!("{}.csv", table.name));
            let mut w =
                csv::Writer::from_path(&path).map_err(|e| Error::Io(std::io::Error::other(e)))?;
            w.write_record(&table.header)
                .map_err(|e| Error::Format(e.to_string()))?;
            for row in &table.rows {
                w.write_record(row)
                    .map_err(|e| Error::Format(e.to_string()))?;
            }
            w.flush()?;
            written.push(path);
        }

        for (rel, bytes) in &self.blobs {
            let path = out_dir.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, bytes)?;
            written.push(path);
        }

        let summary = serde_json::json!({
            "provenance": self.provenance(),
            "results": self.summary,
        });
        let path = out_dir.join("summary.json");
        fs::write(
            &path,
            serde_json::to_string_pretty(&summary).expect("json") + "\n",
        )?;
        written.push(path);

        let path = out_dir.join("digest.txt");
        let mut digest = format!(
            "command: {}\nconfig_hash: {}\nseed: {}\ntool_version: {}\n\n",
            self.command, self.config_hash, self.seed, self.tool_version
        );
        digest.push_str(&self.digest);
        fs::write(&path, digest)?;
        written.push(path);

        Ok(written)
    }
}

/// Fixed-precision float formatting so table bytes don't wobble.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.6}")
}
