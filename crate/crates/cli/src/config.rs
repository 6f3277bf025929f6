//! JSON config files, `#` metadata blocks and output plumbing.
//!
//! A config file is a JSON object whose keys are the long flag names of the
//! command (`"sample-interval": 0.5`). Flags given on the command line win.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn to_object<T: Serialize>(value: &T) -> Map<String, Value> {
    match serde_json::to_value(value) {
        Ok(Value::Object(map)) => map,
        _ => Map::new(),
    }
}

/// Overlay `flags` on the object stored at `path`.
pub fn resolve<T>(flags: T, path: Option<&Path>) -> Result<T>
where
    T: Serialize + DeserializeOwned + Default,
{
    let Some(path) = path else {
        return Ok(flags);
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    let file: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
    let Value::Object(mut merged) = file else {
        return Err(CliError::usage(format!("config {}: expected a JSON object", path.display())));
    };
    let known = to_object(&T::default());
    if let Some(bad) = merged.keys().find(|k| !known.contains_key(*k)) {
        return Err(CliError::usage(format!("config {}: unknown key {bad:?}", path.display())));
    }
    for (k, v) in to_object(&flags) {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
}

/// Ordered `# key = value` lines opening every output.
#[derive(Debug, Clone)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(command: &str) -> Self {
        let mut m = Metadata { entries: Vec::new() };
        m.push("flexsim", VERSION);
        m.push("command", command);
        m
    }

    pub fn push(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    /// Echo of the resolved config as one JSON line. The output path is
    /// left out so the same run written to two places stays byte-identical.
    pub fn config<T: Serialize>(&mut self, cfg: &T) -> &mut Self {
        let mut map = to_object(cfg);
        map.remove("out");
        let json = serde_json::to_string(&map).unwrap_or_default();
        self.push("config", json)
    }

    pub fn write<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(out, "# {k} = {v}")?;
        }
        Ok(())
    }
}

/// Metadata and body, written in one go once the run has finished.
pub fn emit(path: Option<&Path>, meta: &Metadata, body: &[u8]) -> Result<()> {
    let mut buf = Vec::with_capacity(body.len() + 512);
    meta.write(&mut buf)?;
    buf.extend_from_slice(body);
    match path {
        Some(p) => std::fs::write(p, buf).map_err(|e| CliError::io(p.display(), e)),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(&buf)?;
            lock.flush()?;
            Ok(())
        }
    }
}

/// A CSV file carrying a metadata block.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub meta: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| CliError::io(path.display(), e))?;
        let mut meta = BTreeMap::new();
        let mut columns = None;
        let mut rows = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| CliError::io(path.display(), e))?;
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields = line.split(',').map(str::trim);
            if columns.is_none() {
                columns = Some(fields.map(String::from).collect::<Vec<_>>());
                continue;
            }
            let row = fields
                .map(|f| if f.is_empty() { Ok(f64::NAN) } else { f.parse::<f64>() })
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| CliError::io(path.display(), format!("line {}: {e}", i + 1)))?;
            rows.push(row);
        }
        let columns = columns.ok_or_else(|| CliError::io(path.display(), "no CSV header"))?;
        if let Some(bad) = rows.iter().position(|r| r.len() != columns.len()) {
            return Err(CliError::io(path.display(), format!("row {} has the wrong width", bad + 1)));
        }
        Ok(CsvTable { meta, columns, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}
