use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use mnv_core::io::{field_to_csv, write_atomic, write_field};
use mnv_core::scattering::TransformStats;
use mnv_core::ComplexField;
use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};

pub const SCHEMA: u32 = 1;

/// A JSON report; `created_unix` is the only field that varies between
/// identical runs.
pub struct Report {
    body: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let mut body = Map::new();
        body.insert("schema".into(), json!(SCHEMA));
        body.insert("command".into(), json!(command));
        body.insert("created_unix".into(), json!(created));
        body.insert("config".into(), cfg.to_json());
        Report { body }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.body.insert(key.into(), value.into());
    }

    pub fn value(&self) -> Value {
        Value::Object(self.body.clone())
    }

    pub fn write(&self, dir: &Path, name: &str) -> anyhow::Result<()> {
        fs::create_dir_all(dir)?;
        let text = serde_json::to_string_pretty(&self.value())?;
        write_atomic(&dir.join(format!("{name}.json")), text.as_bytes())?;
        Ok(())
    }
}

pub fn stats_json(stats: &TransformStats) -> Value {
    json!({
        "nodes": stats.nodes(),
        "iterations_histogram": stats.iterations,
        "max_residual": stats.max_residual,
    })
}

/// Writes `name.mnvf` and/or `name.csv` into the output directory.
pub fn write_outputs(cfg: &RunConfig, name: &str, f: &ComplexField) -> anyhow::Result<Vec<String>> {
    fs::create_dir_all(&cfg.out)?;
    let mut written = Vec::new();
    for fmt in &cfg.formats {
        let file = match fmt {
            Format::Bin => {
                let p = cfg.out.join(format!("{name}.mnvf"));
                write_field(f, &p)?;
                p
            }
            Format::Csv => {
                let p = cfg.out.join(format!("{name}.csv"));
                write_atomic(&p, field_to_csv(f).as_bytes())?;
                p
            }
        };
        written.push(file.display().to_string());
    }
    Ok(written)
}
