//! Experiment configuration: flat `key=value` files overridden by CLI flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Registered process name, e.g. `balls-bins`.
    pub process: String,
    pub n: Option<u64>,
    pub m: Option<u64>,
    pub c: Option<f64>,
    pub d: Option<u32>,
    pub kappa: Option<usize>,
    pub envelope: Option<String>,
    pub alpha: Option<f64>,
    pub k_const: Option<f64>,
    pub gen: Option<String>,
    pub graph: Option<PathBuf>,
    pub seeds: u64,
    pub base_seed: u64,
    /// Index of the first replica; replica `r` uses `derive_seed(base_seed, replica_offset + r)`.
    pub replica_offset: u64,
    pub out: Option<PathBuf>,
    pub stride: Option<u64>,
    pub workers: Option<usize>,
    pub plot_var: Option<String>,
    pub max_violation_rate: f64,
    pub sample: Option<usize>,
    pub drift_audit: bool,
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn new(process: impl Into<String>) -> Self {
        Self {
            process: process.into(),
            n: None,
            m: None,
            c: None,
            d: None,
            kappa: None,
            envelope: None,
            alpha: None,
            k_const: None,
            gen: None,
            graph: None,
            seeds: 1,
            base_seed: 0,
            replica_offset: 0,
            out: None,
            stride: None,
            workers: None,
            plot_var: None,
            max_violation_rate: 0.05,
            sample: None,
            drift_audit: false,
            record_timing: false,
        }
    }

    /// Sets one key; `-` and `_` are interchangeable in key names.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "process" => self.process = value.to_string(),
            "n" => self.n = Some(parse(&key, value)?),
            "m" => self.m = Some(parse(&key, value)?),
            "c" => self.c = Some(parse(&key, value)?),
            "d" => self.d = Some(parse(&key, value)?),
            "kappa" => self.kappa = Some(parse(&key, value)?),
            "envelope" => self.envelope = Some(value.to_string()),
            "alpha" => self.alpha = Some(parse(&key, value)?),
            "K" | "k_const" => self.k_const = Some(parse(&key, value)?),
            "gen" => self.gen = Some(value.to_string()),
            "graph" => self.graph = Some(PathBuf::from(value)),
            "seeds" => self.seeds = parse(&key, value)?,
            "base_seed" => self.base_seed = parse(&key, value)?,
            "replica_offset" => self.replica_offset = parse(&key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "stride" => self.stride = Some(parse(&key, value)?),
            "workers" => self.workers = Some(parse(&key, value)?),
            "plot_var" => self.plot_var = Some(value.to_string()),
            "max_violation_rate" => self.max_violation_rate = parse(&key, value)?,
            "sample" => self.sample = Some(parse(&key, value)?),
            "drift_audit" => self.drift_audit = parse_bool(&key, value)?,
            "record_timing" => self.record_timing = parse_bool(&key, value)?,
            _ => return Err(HarnessError::config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn apply_all<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
        for (k, v) in pairs {
            self.apply(k, v)?;
        }
        Ok(())
    }

    /// Applies a config file; a `process` key must agree with the current process.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let pairs = parse_pairs(&text)?;
        for (k, v) in &pairs {
            if k == "process" && v != &self.process {
                return Err(HarnessError::config(format!(
                    "config file is for process {v:?}, not {:?}",
                    self.process
                )));
            }
            self.apply(k, v)?;
        }
        Ok(())
    }

    pub fn validate_common(&self) -> Result<()> {
        if self.seeds == 0 {
            return Err(HarnessError::config("seeds must be at least 1"));
        }
        if self.stride == Some(0) {
            return Err(HarnessError::config("stride must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(HarnessError::config("workers must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.max_violation_rate) {
            return Err(HarnessError::config("max-violation-rate must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Parses `key=value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::config(format!("line {}: expected key=value, got {line:?}", lineno + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| HarnessError::config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(HarnessError::config(format!("invalid boolean {value:?} for {key}"))),
    }
}

/// `max(1, steps / 2000)`.
pub fn default_stride(steps: u64) -> u64 {
    (steps / 2000).max(1)
}

/// Canonical parameter map echoed into reports.
pub type Parameters = BTreeMap<String, String>;
