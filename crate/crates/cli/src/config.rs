//! `key = value` run configuration.
//!
//! Recognized keys, with defaults:
//!
//! | key              | default      |
//! |------------------|--------------|
//! | `z_l`, `z_n`     | `8`, `256`   |
//! | `k_l`, `k_n`     | `6`, `128`   |
//! | `tolerance`      | `1e-10`      |
//! | `max_iterations` | `200`        |
//! | `method`         | `born`       |
//! | `phase`          | `mnv`        |
//! | `t`              | `0`          |
//! | `fd_step`        | `1e-3`       |
//! | `input`          | none         |
//! | `potential`      | none         |
//! | `out`            | `mnv-out`    |
//! | `formats`        | `bin,csv`    |
//!
//! Blank lines and lines starting with `#` are ignored. Command-line flags
//! override file values.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail};
use mnv_core::evolution::PhaseKind;
use mnv_core::{Grid, Method, SolverConfig};
use mnv_core::scattering::TransformConfig;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Bin,
    Csv,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub z_l: f64,
    pub z_n: usize,
    pub k_l: f64,
    pub k_n: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub method: Method,
    pub phase: PhaseKind,
    pub t: f64,
    pub fd_step: f64,
    pub input: Option<PathBuf>,
    pub potential: Option<String>,
    pub out: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            z_l: 8.0,
            z_n: 256,
            k_l: 6.0,
            k_n: 128,
            tolerance: 1e-10,
            max_iterations: 200,
            method: Method::Born,
            phase: PhaseKind::Mnv,
            t: 0.0,
            fd_step: 1e-3,
            input: None,
            potential: None,
            out: PathBuf::from("mnv-out"),
            formats: vec![Format::Bin, Format::Csv],
        }
    }
}

pub fn parse_method(s: &str) -> anyhow::Result<Method> {
    match s.trim() {
        "born" => Ok(Method::Born),
        "krylov" | "gmres" => Ok(Method::Krylov),
        other => bail!("unknown method {other:?} (expected born or krylov)"),
    }
}

pub fn parse_phase(s: &str) -> anyhow::Result<PhaseKind> {
    match s.trim() {
        "mnv" => Ok(PhaseKind::Mnv),
        "ds" => Ok(PhaseKind::Ds),
        other => bail!("unknown phase {other:?} (expected ds or mnv)"),
    }
}

fn parse_formats(s: &str) -> anyhow::Result<Vec<Format>> {
    s.split(',')
        .map(|f| match f.trim() {
            "bin" => Ok(Format::Bin),
            "csv" => Ok(Format::Csv),
            other => Err(anyhow!("unknown format {other:?} (expected bin or csv)")),
        })
        .collect()
}

/// Parses the `key = value` text into a map, rejecting malformed lines.
pub fn parse_pairs(text: &str) -> anyhow::Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl RunConfig {
    pub fn apply_pairs(&mut self, pairs: &BTreeMap<String, String>) -> anyhow::Result<()> {
        for (k, v) in pairs {
            let bad = |e: &dyn std::fmt::Display| anyhow!("config key {k}: {e}");
            match k.as_str() {
                "z_l" => self.z_l = v.parse().map_err(|e| bad(&e))?,
                "z_n" => self.z_n = v.parse().map_err(|e| bad(&e))?,
                "k_l" => self.k_l = v.parse().map_err(|e| bad(&e))?,
                "k_n" => self.k_n = v.parse().map_err(|e| bad(&e))?,
                "tolerance" => self.tolerance = v.parse().map_err(|e| bad(&e))?,
                "max_iterations" => self.max_iterations = v.parse().map_err(|e| bad(&e))?,
                "method" => self.method = parse_method(v)?,
                "phase" => self.phase = parse_phase(v)?,
                "t" => self.t = v.parse().map_err(|e| bad(&e))?,
                "fd_step" => self.fd_step = v.parse().map_err(|e| bad(&e))?,
                "input" => self.input = Some(PathBuf::from(v)),
                "potential" => self.potential = Some(v.clone()),
                "out" => self.out = PathBuf::from(v),
                "formats" => self.formats = parse_formats(v)?,
                other => bail!("unknown config key {other:?}"),
            }
        }
        Ok(())
    }

    pub fn z_grid(&self) -> anyhow::Result<Grid> {
        Ok(Grid::new(self.z_l, self.z_n)?)
    }

    pub fn k_grid(&self) -> anyhow::Result<Grid> {
        Ok(Grid::new(self.k_l, self.k_n)?)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig { tolerance: self.tolerance, max_iterations: self.max_iterations, method: self.method }
    }

    pub fn transform(&self) -> anyhow::Result<TransformConfig> {
        let cfg = TransformConfig { z_grid: self.z_grid()?, k_grid: self.k_grid()?, solver: self.solver() };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The settings echoed into every report.
    pub fn to_json(&self) -> Value {
        json!({
            "z_grid": { "half_width": self.z_l, "points": self.z_n },
            "k_grid": { "half_width": self.k_l, "points": self.k_n },
            "solver": {
                "tolerance": self.tolerance,
                "max_iterations": self.max_iterations,
                "method": match self.method { Method::Born => "born", Method::Krylov => "krylov" },
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_override_defaults() {
        let mut cfg = RunConfig::default();
        let pairs = parse_pairs("# comment\nz_n = 64\n\nmethod = krylov\nformats = csv\n").unwrap();
        cfg.apply_pairs(&pairs).unwrap();
        assert_eq!(cfg.z_n, 64);
        assert_eq!(cfg.method, Method::Krylov);
        assert_eq!(cfg.formats, vec![Format::Csv]);
        assert_eq!(cfg.k_n, 128);
    }

    #[test]
    fn bad_lines_are_rejected() {
        assert!(parse_pairs("z_n 64").is_err());
        let mut cfg = RunConfig::default();
        assert!(cfg.apply_pairs(&parse_pairs("colour = red").unwrap()).is_err());
        assert!(cfg.apply_pairs(&parse_pairs("z_n = many").unwrap()).is_err());
    }
}
