//! CSV tables with a `#`-prefixed provenance header.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Header lines identifying how a table was produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub path: Option<u64>,
}

impl Provenance {
    /// Provenance for `command` run with the canonical config text `config`.
    pub fn new(command: &str, config: &str, seed: u64) -> Self {
        Provenance {
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_sha256: sha256_hex(config.as_bytes()),
            seed,
            path: None,
        }
    }

    pub fn for_path(&self, path: u64) -> Self {
        Provenance { path: Some(path), ..self.clone() }
    }

    fn lines(&self) -> String {
        let mut s = format!(
            "# hydrowind {}\n# command: {}\n# config_sha256: {}\n# seed: {}\n",
            self.version, self.command, self.config_sha256, self.seed
        );
        if let Some(p) = self.path {
            let _ = writeln!(s, "# path: {p}");
        }
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// In-memory CSV table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    /// `key: value` pairs from the header comments (the first line is stored as `version`).
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        CsvTable { meta: Vec::new(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| Error::Format(format!("no column {name}")))
    }

    /// Numeric values of a column.
    pub fn floats(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column(name)?;
        self.rows
            .iter()
            .map(|r| r[c].parse::<f64>().map_err(|_| Error::Format(format!("column {name}: bad number {}", r[c]))))
            .collect()
    }

    pub fn render(&self, prov: &Provenance) -> String {
        let mut s = prov.lines();
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path, prov: &Provenance) -> Result<()> {
        std::fs::write(path, self.render(prov))?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut t = CsvTable::default();
        let mut header = true;
        for line in text.lines() {
            if let Some(c) = line.strip_prefix('#') {
                let c = c.trim();
                match c.split_once(": ") {
                    Some((k, v)) => t.meta.push((k.into(), v.into())),
                    None => t.meta.push(("version".into(), c.trim_start_matches("hydrowind ").into())),
                }
            } else if header {
                t.columns = line.split(',').map(String::from).collect();
                header = false;
            } else if !line.is_empty() {
                let row: Vec<String> = line.split(',').map(String::from).collect();
                if row.len() != t.columns.len() {
                    return Err(Error::Format(format!("row has {} fields, header has {}", row.len(), t.columns.len())));
                }
                t.rows.push(row);
            }
        }
        if header {
            return Err(Error::Format("table has no header row".into()));
        }
        Ok(t)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}
