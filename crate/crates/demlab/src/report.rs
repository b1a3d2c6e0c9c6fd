//! The `report.json` schema.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Parameters;
use crate::error::{HarnessError, Result};

pub const REPORT_VERSION: &str = "dem-lab-report-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSummary {
    pub var: String,
    pub plus_initial: Option<f64>,
    pub plus_final: Option<f64>,
    pub minus_initial: Option<f64>,
    pub minus_final: Option<f64>,
    pub frozen_at: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaResult {
    pub replica: u64,
    pub seed: u64,
    /// `ok` or `error`.
    pub status: String,
    pub error: Option<String>,
    pub steps: u64,
    pub final_values: Vec<f64>,
    pub matching_size: Option<u64>,
    pub unmatched: Option<u64>,
    pub first_violation_step: Option<u64>,
    pub first_violation_var: Option<String>,
    pub max_deviation_ratio: Option<f64>,
    pub max_transform_increment: Option<f64>,
    pub drift_checked_steps: u64,
    pub drift_failures: u64,
    /// Largest summed variance bound over the tracked vertices (matching only).
    pub variance_total: Option<f64>,
    pub increment_bound: Option<f64>,
    pub transforms: Vec<TransformSummary>,
}

impl ReplicaResult {
    pub fn empty(replica: u64, seed: u64) -> Self {
        Self {
            replica,
            seed,
            status: "ok".into(),
            error: None,
            steps: 0,
            final_values: Vec::new(),
            matching_size: None,
            unmatched: None,
            first_violation_step: None,
            first_violation_var: None,
            max_deviation_ratio: None,
            max_transform_increment: None,
            drift_checked_steps: 0,
            drift_failures: 0,
            variance_total: None,
            increment_bound: None,
            transforms: Vec::new(),
        }
    }

    pub fn failed(replica: u64, seed: u64, message: String) -> Self {
        Self {
            status: "error".into(),
            error: Some(message),
            ..Self::empty(replica, seed)
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn violated(&self) -> bool {
        self.first_violation_step.is_some()
    }
}

/// A martingale tail bound next to the matching empirical frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub var: String,
    /// `azuma` or `freedman`.
    pub inequality: String,
    pub c: f64,
    pub m: Option<u64>,
    pub b: Option<f64>,
    pub lambda: f64,
    pub bound: f64,
    /// Fraction of samples with `X^+(end) - X^+(0) >= lambda`.
    pub empirical_tail: Option<f64>,
    /// Fraction of samples with `X^+(end) > 0`.
    pub positive_frequency: Option<f64>,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub completed: u64,
    pub failed: u64,
    pub tracked: Vec<String>,
    pub mean_final: Vec<f64>,
    pub stddev_final: Vec<f64>,
    pub predicted_final: Vec<Option<f64>>,
    pub relative_error: Vec<Option<f64>>,
    pub violation_count: u64,
    pub violation_frequency: f64,
    pub mean_matching_size: Option<f64>,
    pub mean_unmatched_fraction: Option<f64>,
    pub drift_checked_steps: u64,
    pub drift_failures: u64,
    pub tail_bounds: Vec<TailBound>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub version: String,
    pub process: String,
    pub parameters: Parameters,
    pub base_seed: u64,
    pub replica_offset: u64,
    pub replicas: u64,
    pub aggregate: Aggregate,
    pub replica_results: Vec<ReplicaResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl EnsembleReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text)?;
        if report.version != REPORT_VERSION {
            return Err(HarnessError::config(format!(
                "unsupported report version {:?}",
                report.version
            )));
        }
        Ok(report)
    }
}

pub fn emit_report(report: &EnsembleReport, path: &Path) -> Result<()> {
    let text = report.to_json()?;
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

/// `Some(x)` for finite `x`.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Mean and sample standard deviation, accumulated in the given order.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
