//! Built-in process and graph-generator strategies.

use std::sync::Arc;

use demlab_core::balls_bins::{self, BallsBinsConfig, BallsEnvelope};
use demlab_core::er_components::{self, ComponentsConfig};
use demlab_core::graph::{check_feasible, gen_circulant, gen_pairing, RegularGraph};
use demlab_core::greedy_matching::{self, MatchingConfig, MatchingParams};
use demlab_core::inequalities::{azuma_bound, freedman_bound, AzumaParams, FreedmanParams};
use demlab_core::trajectories::{balls_trajectory, components_family, components_trajectory, ErrorFunctionSpec};
use demlab_core::{derive_seed, MartingaleTransform};

use crate::config::{default_stride, ExperimentConfig, Parameters};
use crate::error::{HarnessError, Result};
use crate::registry::{GraphGenerator, PreparedProcess, Process, Registry, ReplicaTrace};
use crate::report::{finite, ReplicaResult, TailBound, TransformSummary};

/// Increment bound used for the balls-bins Azuma comparison.
pub const BALLS_INCREMENT_BOUND: f64 = 6.0;

/// Seed stream for per-replica random graphs.
const GRAPH_STREAM: u64 = 0x0067_7261_7068;

fn need<T: Copy>(value: Option<T>, key: &str, process: &str) -> Result<T> {
    value.ok_or_else(|| HarnessError::config(format!("{process} needs --{key}")))
}

fn transform_summary(var: String, plus: &MartingaleTransform, minus: &MartingaleTransform) -> TransformSummary {
    TransformSummary {
        var,
        plus_initial: finite(plus.initial()),
        plus_final: finite(plus.value()),
        minus_initial: finite(minus.initial()),
        minus_final: finite(minus.value()),
        frozen_at: plus.frozen_at(),
    }
}

fn max_increment(plus: &[MartingaleTransform], minus: &[MartingaleTransform]) -> Option<f64> {
    finite(
        plus.iter()
            .chain(minus)
            .map(MartingaleTransform::max_increment)
            .fold(0.0, f64::max),
    )
}

/// `(tail >= lambda, final > 0, samples)` over the `+` transforms.
fn empirical<'a>(
    summaries: impl Iterator<Item = &'a TransformSummary>,
    lambda: f64,
) -> (Option<f64>, Option<f64>, u64) {
    let (mut hits, mut positive, mut count) = (0u64, 0u64, 0u64);
    for s in summaries {
        if let (Some(init), Some(fin)) = (s.plus_initial, s.plus_final) {
            count += 1;
            hits += (fin - init >= lambda) as u64;
            positive += (fin > 0.0) as u64;
        }
    }
    if count == 0 {
        return (None, None, 0);
    }
    (
        Some(hits as f64 / count as f64),
        Some(positive as f64 / count as f64),
        count,
    )
}

fn ok_results(results: &[ReplicaResult]) -> impl Iterator<Item = &ReplicaResult> {
    results.iter().filter(|r| r.is_ok())
}

pub struct BallsBinsProcess;

struct BallsPrepared {
    config: BallsBinsConfig,
    error: ErrorFunctionSpec,
}

impl Process for BallsBinsProcess {
    fn name(&self) -> &'static str {
        "balls-bins"
    }

    fn prepare<'a>(&self, cfg: &ExperimentConfig, _registry: &'a Registry) -> Result<Box<dyn PreparedProcess + 'a>> {
        let n = need(cfg.n, "n", self.name())?;
        let m = need(cfg.m, "m", self.name())?;
        let envelope = match cfg.envelope.as_deref().unwrap_or("basic") {
            "basic" => BallsEnvelope::Basic,
            "selfcorrect" => BallsEnvelope::SelfCorrect {
                alpha: cfg.alpha.unwrap_or(0.1),
            },
            other => {
                return Err(HarnessError::config(format!(
                    "unknown envelope {other:?} (expected basic or selfcorrect)"
                )))
            }
        };
        let config = BallsBinsConfig {
            n,
            m,
            kappa: cfg.kappa.unwrap_or(4),
            envelope,
            stride: cfg.stride.unwrap_or(default_stride(m)),
        };
        config.validate()?;
        let error = envelope.error_function(n)?;
        Ok(Box::new(BallsPrepared { config, error }))
    }
}

impl PreparedProcess for BallsPrepared {
    fn parameters(&self) -> Parameters {
        let c = &self.config;
        let mut p = Parameters::new();
        p.insert("n".into(), c.n.to_string());
        p.insert("m".into(), c.m.to_string());
        p.insert("kappa".into(), c.kappa.to_string());
        p.insert("envelope".into(), c.envelope.name().into());
        if let BallsEnvelope::SelfCorrect { alpha } = c.envelope {
            p.insert("alpha".into(), alpha.to_string());
        }
        p.insert("stride".into(), c.stride.to_string());
        p
    }

    fn time_scale(&self) -> f64 {
        self.config.n as f64
    }

    fn tracked(&self) -> Vec<String> {
        (0..=self.config.kappa).map(balls_bins::series_id).collect()
    }

    fn predicted(&self) -> Vec<Option<f64>> {
        let nf = self.config.n as f64;
        let t = self.config.m as f64 / nf;
        (0..=self.config.kappa)
            .map(|k| balls_trajectory(k as u32, t).ok().map(|x| nf * x))
            .collect()
    }

    fn run_replica(&self, replica: u64, seed: u64) -> demlab_core::Result<ReplicaTrace> {
        let run = balls_bins::run(&self.config, seed)?;
        let mut result = ReplicaResult::empty(replica, seed);
        result.steps = self.config.m;
        result.final_values = run.final_counts().iter().map(|&c| c as f64).collect();
        result.first_violation_step = run.violation.as_ref().map(|v| v.step);
        result.first_violation_var = run.violation.as_ref().map(|v| v.id.clone());
        result.max_deviation_ratio = finite(run.max_deviation_ratio);
        result.max_transform_increment = max_increment(&run.plus, &run.minus);
        result.drift_checked_steps = run.drift.checked_steps;
        result.drift_failures = run.drift.sign_failures;
        result.transforms = (0..=self.config.kappa)
            .map(|k| transform_summary(balls_bins::series_id(k), &run.plus[k], &run.minus[k]))
            .collect();
        Ok(ReplicaTrace {
            result,
            series: run.series,
        })
    }

    fn tail_bounds(&self, results: &[ReplicaResult]) -> Vec<TailBound> {
        let m = self.config.m;
        if m == 0 {
            return Vec::new();
        }
        let lambda = self.config.n as f64 * self.error.eps(0.0);
        let bound = azuma_bound(AzumaParams {
            c: BALLS_INCREMENT_BOUND,
            m,
            lambda,
        })
        .unwrap_or(1.0);
        (0..=self.config.kappa)
            .map(|k| {
                let (tail, positive, samples) =
                    empirical(ok_results(results).filter_map(|r| r.transforms.get(k)), lambda);
                TailBound {
                    var: balls_bins::series_id(k),
                    inequality: "azuma".into(),
                    c: BALLS_INCREMENT_BOUND,
                    m: Some(m),
                    b: None,
                    lambda,
                    bound,
                    empirical_tail: tail,
                    positive_frequency: positive,
                    samples,
                }
            })
            .collect()
    }
}

pub struct ComponentsProcess;

struct ComponentsPrepared {
    config: ComponentsConfig,
    error: ErrorFunctionSpec,
    /// Per `k`: `2 + max_i n |delta(y_k + eps)|` over the run.
    increment_bounds: Vec<f64>,
}

impl Process for ComponentsProcess {
    fn name(&self) -> &'static str {
        "er-components"
    }

    fn prepare<'a>(&self, cfg: &ExperimentConfig, _registry: &'a Registry) -> Result<Box<dyn PreparedProcess + 'a>> {
        let n = need(cfg.n, "n", self.name())?;
        let c = need(cfg.c, "c", self.name())?;
        let mut config = ComponentsConfig {
            n,
            c,
            kappa: cfg.kappa.unwrap_or(4),
            stride: 1,
        };
        config.validate()?;
        config.stride = cfg.stride.unwrap_or(default_stride(config.steps()));
        let error = ErrorFunctionSpec::components(n, config.kappa as u32)?;
        let increment_bounds = components_increment_bounds(&config, &error);
        Ok(Box::new(ComponentsPrepared {
            config,
            error,
            increment_bounds,
        }))
    }
}

fn components_increment_bounds(config: &ComponentsConfig, error: &ErrorFunctionSpec) -> Vec<f64> {
    let nf = config.n as f64;
    let kappa = config.kappa;
    let mut cur = vec![0.0; kappa];
    let mut next = vec![0.0; kappa];
    components_family(0.0, &mut cur);
    let mut eps = error.eps(0.0);
    let mut worst = vec![0.0f64; kappa];
    for i in 0..config.steps() {
        let t = (i + 1) as f64 / nf;
        components_family(t, &mut next);
        let eps_next = error.eps(t);
        for k in 0..kappa {
            let shift = nf * ((next[k] + eps_next) - (cur[k] + eps));
            worst[k] = worst[k].max(shift.abs());
        }
        std::mem::swap(&mut cur, &mut next);
        eps = eps_next;
    }
    worst.into_iter().map(|w| 2.0 + w).collect()
}

impl PreparedProcess for ComponentsPrepared {
    fn parameters(&self) -> Parameters {
        let c = &self.config;
        let mut p = Parameters::new();
        p.insert("n".into(), c.n.to_string());
        p.insert("c".into(), c.c.to_string());
        p.insert("m".into(), c.steps().to_string());
        p.insert("kappa".into(), c.kappa.to_string());
        p.insert("stride".into(), c.stride.to_string());
        p
    }

    fn time_scale(&self) -> f64 {
        self.config.n as f64
    }

    fn tracked(&self) -> Vec<String> {
        (1..=self.config.kappa).map(er_components::series_id).collect()
    }

    fn predicted(&self) -> Vec<Option<f64>> {
        let nf = self.config.n as f64;
        let t = self.config.steps() as f64 / nf;
        (1..=self.config.kappa)
            .map(|k| components_trajectory(k as u32, t).ok().map(|y| nf * y))
            .collect()
    }

    fn run_replica(&self, replica: u64, seed: u64) -> demlab_core::Result<ReplicaTrace> {
        let run = er_components::run(&self.config, seed)?;
        let mut result = ReplicaResult::empty(replica, seed);
        result.steps = self.config.steps();
        result.final_values = run.final_counts().iter().map(|&c| c as f64).collect();
        result.first_violation_step = run.violation.as_ref().map(|v| v.step);
        result.first_violation_var = run.violation.as_ref().map(|v| v.id.clone());
        result.max_deviation_ratio = finite(run.max_deviation_ratio);
        result.max_transform_increment = max_increment(&run.plus, &run.minus);
        result.drift_checked_steps = run.drift.checked_steps;
        result.drift_failures = run.drift.bound_failures + run.drift.shift_failures;
        result.transforms = (1..=self.config.kappa)
            .map(|k| transform_summary(er_components::series_id(k), &run.plus[k - 1], &run.minus[k - 1]))
            .collect();
        Ok(ReplicaTrace {
            result,
            series: run.series,
        })
    }

    fn tail_bounds(&self, results: &[ReplicaResult]) -> Vec<TailBound> {
        let m = self.config.steps();
        let lambda = self.config.n as f64 * self.error.eps(0.0);
        if m == 0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for k in 1..=self.config.kappa {
            let c = self.increment_bounds[k - 1];
            if !c.is_finite() {
                continue;
            }
            let bound = azuma_bound(AzumaParams { c, m, lambda }).unwrap_or(1.0);
            let (tail, positive, samples) =
                empirical(ok_results(results).filter_map(|r| r.transforms.get(k - 1)), lambda);
            out.push(TailBound {
                var: er_components::series_id(k),
                inequality: "azuma".into(),
                c,
                m: Some(m),
                b: None,
                lambda,
                bound,
                empirical_tail: tail,
                positive_frequency: positive,
                samples,
            });
        }
        out
    }
}

pub struct MatchingProcess;

struct MatchingPrepared<'a> {
    params: MatchingParams,
    source: String,
    shared: Option<Arc<RegularGraph>>,
    generator: Option<&'a dyn GraphGenerator>,
    config: MatchingConfig,
}

impl Process for MatchingProcess {
    fn name(&self) -> &'static str {
        "matching"
    }

    fn prepare<'a>(&self, cfg: &ExperimentConfig, registry: &'a Registry) -> Result<Box<dyn PreparedProcess + 'a>> {
        let k_const = cfg.k_const.unwrap_or(2.0);
        let (n, d, source, shared, generator) = if let Some(path) = &cfg.graph {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            let graph = RegularGraph::parse_edge_list(&text)?;
            if cfg.n.is_some_and(|n| n != graph.n() as u64) || cfg.d.is_some_and(|d| d != graph.d()) {
                return Err(HarnessError::config("--n/--d disagree with the graph file"));
            }
            (
                graph.n(),
                graph.d(),
                format!("file:{}", path.display()),
                Some(Arc::new(graph)),
                None,
            )
        } else {
            let n = need(cfg.n, "n", self.name())?;
            let n = u32::try_from(n).map_err(|_| HarnessError::config(format!("n = {n} is too large")))?;
            let d = need(cfg.d, "d", self.name())?;
            check_feasible(n, d)?;
            let gen_name = cfg.gen.as_deref().unwrap_or("circulant");
            let generator = registry.generator(gen_name)?;
            let shared = if generator.deterministic() {
                Some(Arc::new(generator.generate(n, d, 0)?))
            } else {
                None
            };
            (n, d, generator.name().to_string(), shared, Some(generator))
        };
        let params = MatchingParams::new(n, d, k_const)?;
        let config = MatchingConfig {
            k_const,
            stride: cfg.stride.unwrap_or(default_stride(n as u64 / 2)),
            sample: cfg.sample.unwrap_or(4),
            drift_audit: cfg.drift_audit,
        };
        Ok(Box::new(MatchingPrepared {
            params,
            source,
            shared,
            generator,
            config,
        }))
    }
}

impl PreparedProcess for MatchingPrepared<'_> {
    fn parameters(&self) -> Parameters {
        let p = &self.params;
        let mut out = Parameters::new();
        out.insert("n".into(), p.n.to_string());
        out.insert("d".into(), p.d.to_string());
        out.insert("K".into(), p.k_const.to_string());
        out.insert("graph".into(), self.source.clone());
        out.insert("s".into(), p.s.to_string());
        out.insert("p_threshold".into(), p.p_threshold.to_string());
        out.insert("stride".into(), self.config.stride.to_string());
        out.insert("sample".into(), self.config.sample.to_string());
        out.insert("drift_audit".into(), self.config.drift_audit.to_string());
        out
    }

    fn time_scale(&self) -> f64 {
        self.params.n as f64
    }

    fn tracked(&self) -> Vec<String> {
        vec!["D_min".into(), "D_max".into()]
    }

    fn predicted(&self) -> Vec<Option<f64>> {
        vec![None, None]
    }

    fn run_replica(&self, replica: u64, seed: u64) -> demlab_core::Result<ReplicaTrace> {
        let generated;
        let graph = match (&self.shared, self.generator) {
            (Some(g), _) => g.as_ref(),
            (None, Some(gen)) => {
                generated = gen.generate(self.params.n, self.params.d, derive_seed(seed, GRAPH_STREAM))?;
                &generated
            }
            (None, None) => unreachable!("matching needs a graph source"),
        };
        let run = greedy_matching::run(graph, &self.config, seed)?;
        let mut result = ReplicaResult::empty(replica, seed);
        result.steps = run.matching_size;
        result.matching_size = Some(run.matching_size);
        result.unmatched = Some(run.unmatched);
        result.final_values = run.series[..2].iter().map(|s| s.last_value().unwrap_or(0.0)).collect();
        result.first_violation_step = run.violation.as_ref().map(|v| v.step);
        result.first_violation_var = run.violation.as_ref().map(|v| v.id.clone());
        result.max_deviation_ratio = finite(run.max_deviation_ratio);
        result.max_transform_increment = max_increment(&run.plus, &run.minus);
        result.drift_checked_steps = run.drift.checked_steps;
        result.drift_failures = run.drift.failures;
        result.variance_total = finite(run.ledgers.iter().map(|l| l.total()).fold(0.0, f64::max));
        result.increment_bound = finite(run.increment_bound);
        result.transforms = run
            .sampled
            .iter()
            .enumerate()
            .map(|(j, v)| transform_summary(format!("D_{v}"), &run.plus[j], &run.minus[j]))
            .collect();
        Ok(ReplicaTrace {
            result,
            series: run.series,
        })
    }

    fn tail_bounds(&self, results: &[ReplicaResult]) -> Vec<TailBound> {
        let c = ok_results(results)
            .filter_map(|r| r.increment_bound)
            .fold(0.0, f64::max);
        let b = ok_results(results).filter_map(|r| r.variance_total).fold(0.0, f64::max);
        let lambda = self.params.s;
        if !(c > 0.0) {
            return Vec::new();
        }
        let bound = freedman_bound(FreedmanParams { c, b, lambda }).unwrap_or(1.0);
        let (tail, positive, samples) = empirical(ok_results(results).flat_map(|r| r.transforms.iter()), lambda);
        vec![TailBound {
            var: "D_v".into(),
            inequality: "freedman".into(),
            c,
            m: None,
            b: Some(b),
            lambda,
            bound,
            empirical_tail: tail,
            positive_frequency: positive,
            samples,
        }]
    }
}

pub struct Circulant;

impl GraphGenerator for Circulant {
    fn name(&self) -> &'static str {
        "circulant"
    }

    fn deterministic(&self) -> bool {
        true
    }

    fn generate(&self, n: u32, d: u32, _seed: u64) -> demlab_core::Result<RegularGraph> {
        gen_circulant(n, d)
    }
}

pub struct Pairing;

impl GraphGenerator for Pairing {
    fn name(&self) -> &'static str {
        "pairing"
    }

    fn deterministic(&self) -> bool {
        false
    }

    fn generate(&self, n: u32, d: u32, seed: u64) -> demlab_core::Result<RegularGraph> {
        gen_pairing(n, d, seed)
    }
}
