//! Seeded parallel replicas, order-fixed aggregation and output files.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use demlab_core::{derive_seed, TrackedSeries};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::registry::{PreparedProcess, Registry};
use crate::report::{emit_report, mean_std, Aggregate, EnsembleReport, ReplicaResult, REPORT_VERSION};
use crate::timeseries::emit_timeseries;

/// A finished ensemble: the report plus the first replica's recorded trace.
#[derive(Debug, Clone)]
pub struct EnsembleOutcome {
    pub report: EnsembleReport,
    pub series: Vec<TrackedSeries>,
    pub time_scale: f64,
    pub plot_var: String,
    pub wall_clock_seconds: f64,
}

impl EnsembleOutcome {
    pub fn violation_frequency(&self) -> f64 {
        self.report.aggregate.violation_frequency
    }
}

/// Runs `cfg.seeds` replicas; replica `r` uses `derive_seed(base_seed, replica_offset + r)`.
pub fn run_ensemble(cfg: &ExperimentConfig, registry: &Registry) -> Result<EnsembleOutcome> {
    cfg.validate_common()?;
    let started = Instant::now();
    let process = registry.process(&cfg.process)?;
    let prepared = process.prepare(cfg, registry)?;
    let tracked = prepared.tracked();

    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = cfg.workers {
            b = b.num_threads(w);
        }
        b.build()
            .map_err(|e| HarnessError::config(format!("thread pool: {e}")))?
    };
    let prepared_ref: &dyn PreparedProcess = prepared.as_ref();
    let outcomes: Vec<(ReplicaResult, Option<Vec<TrackedSeries>>)> = pool.install(|| {
        (0..cfg.seeds)
            .into_par_iter()
            .map(|r| {
                let replica = cfg.replica_offset + r;
                let seed = derive_seed(cfg.base_seed, replica);
                match prepared_ref.run_replica(replica, seed) {
                    Ok(trace) => (trace.result, (r == 0).then_some(trace.series)),
                    Err(e) => (ReplicaResult::failed(replica, seed, e.to_string()), None),
                }
            })
            .collect()
    });
    let mut results = Vec::with_capacity(outcomes.len());
    let mut series = Vec::new();
    for (result, s) in outcomes {
        if let Some(s) = s {
            series = s;
        }
        results.push(result);
    }

    let plot_var = match &cfg.plot_var {
        Some(v) if series.iter().any(|s| s.id() == v) || tracked.contains(v) => v.clone(),
        Some(v) => return Err(HarnessError::config(format!("unknown plot variable {v:?}"))),
        None => tracked.first().cloned().unwrap_or_default(),
    };

    let aggregate = aggregate(prepared_ref, &tracked, &results);
    let wall_clock_seconds = started.elapsed().as_secs_f64();
    let report = EnsembleReport {
        version: REPORT_VERSION.into(),
        process: process.name().into(),
        parameters: prepared.parameters(),
        base_seed: cfg.base_seed,
        replica_offset: cfg.replica_offset,
        replicas: cfg.seeds,
        aggregate,
        replica_results: results,
        wall_clock_seconds: cfg.record_timing.then_some(wall_clock_seconds),
    };
    Ok(EnsembleOutcome {
        report,
        series,
        time_scale: prepared.time_scale(),
        plot_var,
        wall_clock_seconds,
    })
}

fn aggregate(prepared: &dyn PreparedProcess, tracked: &[String], results: &[ReplicaResult]) -> Aggregate {
    let ok: Vec<&ReplicaResult> = results.iter().filter(|r| r.is_ok()).collect();
    let predicted = prepared.predicted();
    let mut mean_final = Vec::with_capacity(tracked.len());
    let mut stddev_final = Vec::with_capacity(tracked.len());
    let mut relative_error = Vec::with_capacity(tracked.len());
    for i in 0..tracked.len() {
        let values: Vec<f64> = ok.iter().filter_map(|r| r.final_values.get(i).copied()).collect();
        let (mean, std) = mean_std(&values);
        mean_final.push(mean);
        stddev_final.push(std);
        let pred = predicted.get(i).copied().flatten();
        relative_error.push(
            pred.filter(|p| *p > 0.0 && !values.is_empty())
                .map(|p| (mean - p).abs() / p),
        );
    }
    let sizes: Vec<f64> = ok.iter().filter_map(|r| r.matching_size.map(|m| m as f64)).collect();
    let unmatched: Vec<f64> = ok
        .iter()
        .filter_map(|r| r.unmatched.map(|u| u as f64 / prepared.time_scale()))
        .collect();
    let violation_count = results.iter().filter(|r| r.violated()).count() as u64;
    Aggregate {
        completed: ok.len() as u64,
        failed: (results.len() - ok.len()) as u64,
        tracked: tracked.to_vec(),
        mean_final,
        stddev_final,
        predicted_final: predicted,
        relative_error,
        violation_count,
        violation_frequency: if results.is_empty() {
            0.0
        } else {
            violation_count as f64 / results.len() as f64
        },
        mean_matching_size: (!sizes.is_empty()).then(|| mean_std(&sizes).0),
        mean_unmatched_fraction: (!unmatched.is_empty()).then(|| mean_std(&unmatched).0),
        drift_checked_steps: ok.iter().map(|r| r.drift_checked_steps).sum(),
        drift_failures: ok.iter().map(|r| r.drift_failures).sum(),
        tail_bounds: prepared.tail_bounds(results),
    }
}

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const REPORT_FILE: &str = "report.json";
pub const PLOTDATA_FILE: &str = "plotdata.csv";

/// Writes `timeseries.csv`, `report.json` and `plotdata.csv` into `dir`.
pub fn write_outputs(outcome: &EnsembleOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    emit_timeseries(&dir.join(TIMESERIES_FILE), &outcome.series, outcome.time_scale, None)?;
    emit_report(&outcome.report, &dir.join(REPORT_FILE))?;
    emit_timeseries(
        &dir.join(PLOTDATA_FILE),
        &outcome.series,
        outcome.time_scale,
        Some(&outcome.plot_var),
    )
}

/// Runs the ensemble, writes outputs when `cfg.out` is set and returns the exit code.
pub fn run_and_emit(cfg: &ExperimentConfig, registry: &Registry) -> Result<(EnsembleOutcome, i32)> {
    let outcome = run_ensemble(cfg, registry)?;
    if let Some(dir) = &cfg.out {
        write_outputs(&outcome, dir)?;
    }
    let code = if outcome.violation_frequency() > cfg.max_violation_rate {
        1
    } else {
        0
    };
    Ok((outcome, code))
}
