//! Random greedy matching: repeatedly match a uniformly random edge whose
//! endpoints are both unmatched, until no such edge is left.
//!
//! `D_v` counts the unmatched neighbours of `v`, for matched `v` as well.
//! While `p(t) = 1 - 2t` stays above `(s/d)^{1/5}` every `D_v` is checked
//! against `d p(t) +- s p(t)^{-4}` with `s = K sqrt(d ln n)`.

use std::sync::Arc;

use num_rational::Ratio;

use crate::envelope::{band, exceedance, Envelope, Violation};
use crate::error::{domain, param, Result};
use crate::graph::{RegularGraph, SimpleGraph};
use crate::inequalities::VarianceLedger;
use crate::seed::{derive_seed, rng_from_seed, uniform_below, SimRng};
use crate::series::{SeriesPoint, TrackedSeries};
use crate::trajectories::{ErrorFunctionSpec, MatchingDegreeTrajectory};
use crate::transform::{MartingaleTransform, Sign};

const DEAD: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct MatchingState<'g> {
    graph: &'g SimpleGraph,
    step: u64,
    matching: Vec<(u32, u32)>,
    matched: Vec<bool>,
    degree: Vec<u32>,
    /// `degree_hist[x]` = number of vertices with `D_v = x`.
    degree_hist: Vec<u32>,
    min_degree: u32,
    max_degree: u32,
    alive: Vec<u32>,
    position: Vec<u32>,
    /// `sum_v = sum of D_u over unmatched neighbours u`, when maintained.
    neighbour_sums: Option<Vec<i64>>,
    rng: SimRng,
}

impl<'g> MatchingState<'g> {
    pub fn new(graph: &'g SimpleGraph, seed: u64) -> Self {
        let n = graph.n() as usize;
        let degree: Vec<u32> = (0..graph.n()).map(|v| graph.degree(v) as u32).collect();
        let top = degree.iter().copied().max().unwrap_or(0);
        let mut degree_hist = vec![0u32; top as usize + 1];
        for &x in &degree {
            degree_hist[x as usize] += 1;
        }
        let min_degree = degree.iter().copied().min().unwrap_or(0);
        Self {
            graph,
            step: 0,
            matching: Vec::new(),
            matched: vec![false; n],
            degree,
            degree_hist,
            min_degree,
            max_degree: top,
            alive: (0..graph.edge_count() as u32).collect(),
            position: (0..graph.edge_count() as u32).collect(),
            neighbour_sums: None,
            rng: rng_from_seed(seed),
        }
    }

    pub fn graph(&self) -> &'g SimpleGraph {
        self.graph
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn matching(&self) -> &[(u32, u32)] {
        &self.matching
    }

    pub fn is_matched(&self, v: u32) -> bool {
        self.matched[v as usize]
    }

    pub fn unmatched_count(&self) -> u64 {
        self.graph.n() as u64 - 2 * self.matching.len() as u64
    }

    #[inline]
    pub fn degree(&self, v: u32) -> u32 {
        self.degree[v as usize]
    }

    pub fn min_degree(&self) -> u32 {
        self.min_degree
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn alive_count(&self) -> usize {
        self.alive.len()
    }

    pub fn alive_edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.alive.iter().map(|&e| self.graph.edges()[e as usize])
    }

    pub fn is_halted(&self) -> bool {
        self.alive.is_empty()
    }

    /// Starts maintaining neighbour sums incrementally; O(n d) once, then O(d^2) per step.
    pub fn enable_neighbour_sums(&mut self) {
        let sums = (0..self.graph.n()).map(|v| self.neighbour_sum_scan(v)).collect();
        self.neighbour_sums = Some(sums);
    }

    pub fn disable_neighbour_sums(&mut self) {
        self.neighbour_sums = None;
    }

    pub fn neighbour_sums(&self) -> Option<&[i64]> {
        self.neighbour_sums.as_deref()
    }

    fn neighbour_sum_scan(&self, v: u32) -> i64 {
        self.graph
            .neighbours(v)
            .iter()
            .filter(|&&u| !self.matched[u as usize])
            .map(|&u| self.degree[u as usize] as i64)
            .sum()
    }

    /// Matches a uniformly random alive edge; `None` once no alive edge remains.
    pub fn step_random(&mut self) -> Option<(u32, u32)> {
        if self.alive.is_empty() {
            return None;
        }
        let idx = uniform_below(&mut self.rng, self.alive.len() as u64) as usize;
        Some(self.match_alive(idx))
    }

    /// Matches the alive edge stored at `idx`.
    pub fn match_alive(&mut self, idx: usize) -> (u32, u32) {
        let eid = self.alive[idx];
        let (a, b) = self.graph.edges()[eid as usize];
        self.mark_matched(a);
        self.mark_matched(b);
        self.matching.push((a, b));
        self.step += 1;
        (a, b)
    }

    fn mark_matched(&mut self, x: u32) {
        let graph = self.graph;
        if let Some(sums) = self.neighbour_sums.as_mut() {
            let dx = self.degree[x as usize] as i64;
            for &v in graph.neighbours(x) {
                sums[v as usize] -= dx;
            }
        }
        self.matched[x as usize] = true;
        for (&u, &eid) in graph.neighbours(x).iter().zip(graph.edge_ids(x)) {
            if self.position[eid as usize] != DEAD {
                self.remove_alive(eid);
            }
            let old = self.degree[u as usize];
            self.degree[u as usize] = old - 1;
            self.degree_hist[old as usize] -= 1;
            self.degree_hist[old as usize - 1] += 1;
            self.min_degree = self.min_degree.min(old - 1);
            while self.max_degree > 0 && self.degree_hist[self.max_degree as usize] == 0 {
                self.max_degree -= 1;
            }
            if !self.matched[u as usize] {
                if let Some(sums) = self.neighbour_sums.as_mut() {
                    for &w in graph.neighbours(u) {
                        sums[w as usize] -= 1;
                    }
                }
            }
        }
    }

    fn remove_alive(&mut self, eid: u32) {
        let pos = self.position[eid as usize] as usize;
        let last = *self.alive.last().expect("alive edge present");
        self.alive.swap_remove(pos);
        if last != eid {
            self.position[last as usize] = pos as u32;
        }
        self.position[eid as usize] = DEAD;
    }

    /// `(-sum_{u in N(v) unmatched} D_u, |E(i)|)`.
    pub fn exact_drift_parts(&self, v: u32) -> Result<(i64, i64)> {
        if self.alive.is_empty() {
            return Err(domain("drift undefined: no alive edges"));
        }
        Ok((-self.neighbour_sum_scan(v), self.alive.len() as i64))
    }

    /// `E[D_v(i+1) - D_v(i) | state]`.
    pub fn exact_drift(&self, v: u32) -> Result<f64> {
        let (num, den) = self.exact_drift_parts(v)?;
        Ok(num as f64 / den as f64)
    }

    pub fn exact_drift_ratio(&self, v: u32) -> Result<Ratio<i64>> {
        let (num, den) = self.exact_drift_parts(v)?;
        Ok(Ratio::new(num, den))
    }

    /// Alive edges with 0, 1 and 2 endpoints among the unmatched neighbours of `v`.
    pub fn edge_classes(&self, v: u32) -> (u64, u64, u64) {
        let (mut one, mut two) = (0u64, 0u64);
        let nbrs = self.graph.neighbours(v);
        for &u in nbrs {
            if self.matched[u as usize] {
                continue;
            }
            for &w in self.graph.neighbours(u) {
                if self.matched[w as usize] {
                    continue;
                }
                if nbrs.binary_search(&w).is_ok() {
                    two += 1;
                } else {
                    one += 1;
                }
            }
        }
        let two = two / 2;
        (self.alive.len() as u64 - one - two, one, two)
    }

    /// `C E[|dD_v^+|]` where `dD_v^+ = dD_v - shift` and `shift` is the
    /// one-step change of `d p + eps`.
    pub fn variance_step(&self, v: u32, shift: f64) -> VarianceStep {
        if self.alive.is_empty() {
            return VarianceStep::from_classes((0, 0, 0), shift);
        }
        VarianceStep::from_classes(self.edge_classes(v), shift)
    }

    /// [`Self::variance_step`] with the inner-edge count kept by `tracker`; O(d).
    pub fn variance_step_tracked(&self, tracker: &InnerEdgeCount, shift: f64) -> VarianceStep {
        if self.alive.is_empty() {
            return VarianceStep::from_classes((0, 0, 0), shift);
        }
        // unmatched-neighbour degree sum = x1 + 2 x2
        let x2 = tracker.count;
        let x1 = self.neighbour_sum_scan(tracker.v) as u64 - 2 * x2;
        VarianceStep::from_classes((self.alive.len() as u64 - x1 - x2, x1, x2), shift)
    }

    /// Matching validity, alive-set contents, degree bookkeeping and the handshake identity.
    pub fn audit(&self) -> bool {
        let n = self.graph.n() as usize;
        let mut seen = vec![false; n];
        for &(a, b) in &self.matching {
            if seen[a as usize] || seen[b as usize] || !self.graph.has_edge(a, b) {
                return false;
            }
            seen[a as usize] = true;
            seen[b as usize] = true;
        }
        if seen != self.matched || self.matching.len() as u64 != self.step {
            return false;
        }
        for v in 0..self.graph.n() {
            let fresh = self
                .graph
                .neighbours(v)
                .iter()
                .filter(|&&u| !self.matched[u as usize])
                .count();
            if fresh as u32 != self.degree[v as usize] {
                return false;
            }
        }
        let expected_alive = self
            .graph
            .edges()
            .iter()
            .filter(|&&(a, b)| !self.matched[a as usize] && !self.matched[b as usize])
            .count();
        let handshake: u64 = (0..self.graph.n())
            .filter(|&v| !self.matched[v as usize])
            .map(|v| self.degree[v as usize] as u64)
            .sum();
        let positions_ok = self
            .alive
            .iter()
            .enumerate()
            .all(|(i, &e)| self.position[e as usize] as usize == i);
        let min = self.degree.iter().copied().min().unwrap_or(0);
        let max = self.degree.iter().copied().max().unwrap_or(0);
        let sums_ok = match &self.neighbour_sums {
            Some(s) => (0..self.graph.n()).all(|v| s[v as usize] == self.neighbour_sum_scan(v)),
            None => true,
        };
        expected_alive == self.alive.len()
            && handshake == 2 * self.alive.len() as u64
            && positions_ok
            && min == self.min_degree
            && max == self.max_degree
            && sums_ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceStep {
    /// Bound on `|dD_v^+|` for this step.
    pub c: f64,
    pub expected_abs: f64,
    pub bound: f64,
}

impl VarianceStep {
    /// From the `(x0, x1, x2)` edge classes; the step changes `D_v` by 0, -1 or -2.
    pub fn from_classes((x0, x1, x2): (u64, u64, u64), shift: f64) -> Self {
        let c = shift.abs().max((1.0 + shift).abs()).max((2.0 + shift).abs());
        let total = (x0 + x1 + x2) as f64;
        if total == 0.0 {
            return Self {
                c,
                expected_abs: 0.0,
                bound: 0.0,
            };
        }
        let expected_abs =
            (x0 as f64 * shift.abs() + x1 as f64 * (1.0 + shift).abs() + x2 as f64 * (2.0 + shift).abs()) / total;
        Self {
            c,
            expected_abs,
            bound: c * expected_abs,
        }
    }
}

/// Alive edges with both endpoints in `N(v)`, kept current as edges are matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InnerEdgeCount {
    v: u32,
    count: u64,
}

impl InnerEdgeCount {
    pub fn new(state: &MatchingState<'_>, v: u32) -> Self {
        Self {
            v,
            count: state.edge_classes(v).2,
        }
    }

    pub fn vertex(&self) -> u32 {
        self.v
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Accounts for `(a, b)`, the edge `state` has just matched.
    pub fn matched(&mut self, state: &MatchingState<'_>, a: u32, b: u32) {
        let graph = state.graph;
        let nbrs = graph.neighbours(self.v);
        let in_a = nbrs.binary_search(&a).is_ok();
        let in_b = nbrs.binary_search(&b).is_ok();
        let mut removed = (in_a && in_b) as u64;
        for (x, inside) in [(a, in_a), (b, in_b)] {
            if inside {
                removed += graph
                    .neighbours(x)
                    .iter()
                    .filter(|&&w| !state.matched[w as usize] && nbrs.binary_search(&w).is_ok())
                    .count() as u64;
            }
        }
        self.count -= removed;
    }
}

/// Envelope constants derived from `(n, d, K)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchingParams {
    pub n: u32,
    pub d: u32,
    pub k_const: f64,
    /// `K sqrt(d ln n)`.
    pub s: f64,
    /// `(s/d)^{1/10}`.
    pub alpha: f64,
    /// `(s/d)^{1/5}`; envelope checks run while `p > p_threshold`.
    pub p_threshold: f64,
    pub error: ErrorFunctionSpec,
}

impl MatchingParams {
    pub fn new(n: u32, d: u32, k_const: f64) -> Result<Self> {
        if !(k_const > 0.0) || !k_const.is_finite() {
            return Err(param(format!("K must be positive, got {k_const}")));
        }
        if n < 2 || d == 0 {
            return Err(param(format!("need n >= 2 and d >= 1, got n = {n}, d = {d}")));
        }
        let s = k_const * (d as f64 * (n as f64).ln()).sqrt();
        let error = ErrorFunctionSpec::matching(s, d as u64)?;
        let ratio = s / d as f64;
        Ok(Self {
            n,
            d,
            k_const,
            s,
            alpha: ratio.powf(0.1),
            p_threshold: ratio.powf(0.2),
            error,
        })
    }

    /// `p(t_i)` computed from the integer count of unmatched vertices.
    #[inline]
    pub fn p_at(&self, step: u64) -> f64 {
        (self.n as f64 - 2.0 * step as f64) / self.n as f64
    }

    #[inline]
    pub fn in_window(&self, step: u64) -> bool {
        self.p_at(step) > self.p_threshold
    }

    /// `-(dp - eps)^2 / ((1/2) n p (dp + eps))`.
    pub fn drift_bound(&self, step: u64) -> f64 {
        let p = self.p_at(step);
        let dp = self.d as f64 * p;
        let eps = self.error.eps(step as f64 / self.n as f64);
        let np = self.n as f64 - 2.0 * step as f64;
        -(dp - eps) * (dp - eps) / (0.5 * np * (dp + eps))
    }
}

#[derive(Debug, Clone)]
pub struct MatchingConfig {
    pub k_const: f64,
    pub stride: u64,
    /// Number of vertices with transforms and variance ledgers.
    pub sample: usize,
    /// Check the drift-envelope bound over all vertices each window step.
    pub drift_audit: bool,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        Self {
            k_const: 2.0,
            stride: 1,
            sample: 4,
            drift_audit: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchingDriftAudit {
    pub checked_steps: u64,
    /// Steps where some vertex with `D_v > 0` had drift above the bound.
    pub failures: u64,
    /// Largest `drift - bound` seen.
    pub max_excess: f64,
    /// Largest exact drift of `D_v^+` over the sampled vertices (reported only).
    pub max_transform_drift: f64,
}

#[derive(Debug, Clone)]
pub struct MatchingRun {
    pub seed: u64,
    pub params: MatchingParams,
    pub matching_size: u64,
    pub unmatched: u64,
    /// Steps `i` with `p(t_i)` above the threshold.
    pub window_steps: u64,
    pub violation: Option<Violation>,
    pub drift: MatchingDriftAudit,
    pub sampled: Vec<u32>,
    pub ledgers: Vec<VarianceLedger>,
    /// Largest per-step increment bound used in the ledgers.
    pub increment_bound: f64,
    pub series: Vec<TrackedSeries>,
    pub plus: Vec<MartingaleTransform>,
    pub minus: Vec<MartingaleTransform>,
    pub max_deviation_ratio: f64,
}

impl MatchingRun {
    pub fn unmatched_fraction(&self) -> f64 {
        self.unmatched as f64 / self.params.n as f64
    }
}

/// Runs the process to exhaustion on `graph`.
pub fn run(graph: &RegularGraph, config: &MatchingConfig, seed: u64) -> Result<MatchingRun> {
    let params = MatchingParams::new(graph.n(), graph.d(), config.k_const)?;
    let n = graph.n();
    let nf = n as f64;
    let d = graph.d() as f64;
    let stride = config.stride.max(1);
    let error = params.error;
    let envelope = Envelope::new(Arc::new(error), 1.0);

    let mut picker = rng_from_seed(derive_seed(seed, 0x4d41_5443_4849_4e47));
    let sample = config.sample.min(n as usize);
    let mut sampled: Vec<u32> = Vec::with_capacity(sample);
    while sampled.len() < sample {
        let v = uniform_below(&mut picker, n as u64) as u32;
        if !sampled.contains(&v) {
            sampled.push(v);
        }
    }

    let mut state = MatchingState::new(graph.graph(), seed);
    let mut series: Vec<TrackedSeries> = vec![TrackedSeries::new("D_min", stride), TrackedSeries::new("D_max", stride)];
    series.extend(sampled.iter().map(|v| TrackedSeries::new(format!("D_{v}"), stride)));
    let trajectory = Arc::new(MatchingDegreeTrajectory { d: graph.d() as u64 });
    let mut plus = Vec::with_capacity(sample);
    let mut minus = Vec::with_capacity(sample);
    for &v in &sampled {
        let x0 = state.degree(v) as f64;
        plus.push(MartingaleTransform::start(
            Sign::Plus,
            trajectory.clone(),
            envelope.clone(),
            x0,
            stride,
        ));
        minus.push(MartingaleTransform::start(
            Sign::Minus,
            trajectory.clone(),
            envelope.clone(),
            x0,
            stride,
        ));
    }
    let mut inner: Vec<InnerEdgeCount> = sampled.iter().map(|&v| InnerEdgeCount::new(&state, v)).collect();
    let mut ledgers = vec![VarianceLedger::new(); sample];
    let mut audit = MatchingDriftAudit {
        max_excess: f64::NEG_INFINITY,
        max_transform_drift: f64::NEG_INFINITY,
        ..Default::default()
    };
    let mut violation = None;
    let mut max_ratio: f64 = 0.0;
    let mut increment_bound: f64 = 0.0;
    let mut window_steps = 0u64;

    let mut window = params.in_window(0);
    if window && config.drift_audit {
        state.enable_neighbour_sums();
    }
    let mut good = !window
        || observe(
            &state,
            0,
            &params,
            &sampled,
            &mut series,
            &mut violation,
            &mut max_ratio,
        );

    while !state.is_halted() {
        let i = state.step();
        if window {
            window_steps += 1;
        }
        let next_window = params.in_window(i + 1);
        if window && good {
            let t = i as f64 / nf;
            let t_next = (i + 1) as f64 / nf;
            let shift = d * (params.p_at(i + 1) - params.p_at(i)) + (error.eps(t_next) - error.eps(t));
            if config.drift_audit {
                audit.checked_steps += 1;
                let sums = state.neighbour_sums().expect("sums maintained in window");
                let min_sum = (0..n).filter(|&v| state.degree(v) > 0).map(|v| sums[v as usize]).min();
                if let Some(min_sum) = min_sum {
                    let worst = -(min_sum as f64) / state.alive_count() as f64;
                    let bound = params.drift_bound(i);
                    let excess = worst - bound;
                    audit.max_excess = audit.max_excess.max(excess);
                    if excess > 1e-12 * bound.abs() {
                        audit.failures += 1;
                    }
                }
            }
            if shift.is_finite() {
                for (j, &v) in sampled.iter().enumerate() {
                    let step = state.variance_step_tracked(&inner[j], shift);
                    increment_bound = increment_bound.max(step.c);
                    ledgers[j].accumulate(step.bound)?;
                    if let Ok(drift) = state.exact_drift(v) {
                        audit.max_transform_drift = audit.max_transform_drift.max(drift - shift);
                    }
                }
            }
        }

        let (a, b) = state.step_random().expect("alive edge present");
        let step = state.step();
        if window {
            for tracker in &mut inner {
                tracker.matched(&state, a, b);
            }
            let t_next = step as f64 / nf;
            let reference = d * params.p_at(step);
            let eps = error.eps(t_next);
            for (j, &v) in sampled.iter().enumerate() {
                let value = state.degree(v) as f64;
                plus[j].advance_with(step, value, reference, eps, good);
                minus[j].advance_with(step, value, reference, eps, good);
            }
        }
        if next_window {
            let inside = observe(
                &state,
                step,
                &params,
                &sampled,
                &mut series,
                &mut violation,
                &mut max_ratio,
            );
            good = good && inside;
        } else if window {
            state.disable_neighbour_sums();
        }
        window = next_window;
    }

    for s in &mut series {
        s.seal();
    }
    for t in plus.iter_mut().chain(minus.iter_mut()) {
        t.seal();
    }

    Ok(MatchingRun {
        seed,
        params,
        matching_size: state.matching().len() as u64,
        unmatched: state.unmatched_count(),
        window_steps,
        violation,
        drift: audit,
        sampled,
        ledgers,
        increment_bound,
        series,
        plus,
        minus,
        max_deviation_ratio: max_ratio,
    })
}

fn observe(
    state: &MatchingState<'_>,
    step: u64,
    params: &MatchingParams,
    sampled: &[u32],
    series: &mut [TrackedSeries],
    violation: &mut Option<Violation>,
    max_ratio: &mut f64,
) -> bool {
    let reference = params.d as f64 * params.p_at(step);
    let eps = params.error.eps(step as f64 / params.n as f64);
    let (lo, hi) = band(1.0, reference, eps);
    let values = [state.min_degree() as f64, state.max_degree() as f64]
        .into_iter()
        .chain(sampled.iter().map(|&v| state.degree(v) as f64));
    let mut inside = true;
    for (idx, (s, value)) in series.iter_mut().zip(values).enumerate() {
        if idx < 2 {
            *max_ratio = max_ratio.max((value - reference).abs() / eps);
            if let Some(ex) = exceedance(value, lo, hi) {
                inside = false;
                if violation.is_none() {
                    *violation = Some(Violation {
                        index: idx,
                        id: s.id().to_string(),
                        step,
                        exceedance: ex,
                    });
                }
            }
        }
        s.observe(SeriesPoint {
            step,
            value,
            reference,
            lo,
            hi,
            drift: None,
        });
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_circulant, gen_pairing};

    fn k4() -> SimpleGraph {
        gen_circulant(4, 3).unwrap().graph().clone()
    }

    fn c4() -> SimpleGraph {
        gen_circulant(4, 2).unwrap().graph().clone()
    }

    #[test]
    fn k4_every_first_choice_leaves_one_edge() {
        let g = k4();
        for idx in 0..6 {
            let mut s = MatchingState::new(&g, 0);
            s.match_alive(idx);
            assert_eq!(s.alive_count(), 1);
            assert!(s.audit());
            s.step_random().unwrap();
            assert!(s.is_halted());
            assert_eq!(s.matching().len(), 2);
            assert!(s.audit());
        }
    }

    #[test]
    fn c4_and_path_examples() {
        let g = c4();
        for idx in 0..4 {
            let mut s = MatchingState::new(&g, 0);
            s.match_alive(idx);
            assert_eq!(s.alive_count(), 1);
            s.step_random();
            assert_eq!(s.matching().len(), 2);
            assert!(s.step_random().is_none());
        }
        let p3 = SimpleGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        for idx in 0..2 {
            let mut s = MatchingState::new(&p3, 0);
            s.match_alive(idx);
            assert!(s.is_halted());
            assert_eq!(s.matching().len(), 1);
            assert!(s.audit());
        }
    }

    #[test]
    fn drift_examples() {
        let g = c4();
        let s = MatchingState::new(&g, 0);
        for v in 0..4 {
            assert_eq!(s.exact_drift_ratio(v).unwrap(), Ratio::from_integer(-1));
        }
        let g = k4();
        let s = MatchingState::new(&g, 0);
        assert_eq!(s.exact_drift(0).unwrap(), -1.5);

        // vertex whose neighbours are all matched
        let p5 = SimpleGraph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let mut s = MatchingState::new(&p5, 0);
        s.match_alive(2);
        assert_eq!(s.alive_count(), 1);
        assert_eq!(s.exact_drift(4).unwrap(), 0.0);
        s.match_alive(0);
        assert!(s.exact_drift(0).is_err());
    }

    #[test]
    fn variance_examples() {
        let g = c4();
        let s = MatchingState::new(&g, 0);
        assert_eq!(s.edge_classes(0), (0, 4, 0));
        let v = s.variance_step(0, 0.0);
        assert_eq!(v.expected_abs, 1.0);
        assert_eq!(v.c, 2.0);
        let v = s.variance_step(0, -0.25);
        assert_eq!(v.expected_abs, 0.75);

        let g = k4();
        let s = MatchingState::new(&g, 0);
        // edges among N(0) = {1,2,3}: 3; edges at 0: 3
        assert_eq!(s.edge_classes(0), (0, 3, 3));

        let p = SimpleGraph::from_edges(5, [(0, 1), (2, 3), (3, 4)]).unwrap();
        let mut s = MatchingState::new(&p, 0);
        s.match_alive(0);
        assert_eq!(s.variance_step(0, 0.0).expected_abs, 0.0);
    }

    #[test]
    fn inner_edge_tracker_matches_scratch() {
        for seed in 0..5 {
            let g = gen_pairing(40, 6, seed).unwrap();
            let mut s = MatchingState::new(g.graph(), seed + 100);
            let mut trackers: Vec<InnerEdgeCount> = (0..40).map(|v| InnerEdgeCount::new(&s, v)).collect();
            while let Some((a, b)) = s.step_random() {
                for t in &mut trackers {
                    t.matched(&s, a, b);
                    assert_eq!(t.count(), s.edge_classes(t.vertex()).2);
                    let shift = -0.3;
                    assert_eq!(s.variance_step_tracked(t, shift), s.variance_step(t.vertex(), shift));
                }
            }
        }
    }

    #[test]
    fn incremental_bookkeeping_matches_scratch() {
        let g = gen_pairing(60, 5, 3).unwrap();
        let mut s = MatchingState::new(g.graph(), 11);
        s.enable_neighbour_sums();
        let mut prev: Vec<u32> = (0..60).map(|v| s.degree(v)).collect();
        while s.step_random().is_some() {
            assert!(s.audit());
            for v in 0..60 {
                assert!(prev[v as usize] - s.degree(v) <= 2);
                prev[v as usize] = s.degree(v);
            }
        }
        assert!(s.audit());
    }

    #[test]
    fn params_examples() {
        let p = MatchingParams::new(10_000, 200, 2.0).unwrap();
        assert!((p.s - 2.0 * (200.0 * 10_000f64.ln()).sqrt()).abs() < 1e-9);
        assert!((p.p_threshold - (p.s / 200.0).powf(0.2)).abs() < 1e-12);
        assert!((p.alpha * p.alpha - p.p_threshold).abs() < 1e-12);
        assert!(MatchingParams::new(100, 3, 0.0).is_err());
        assert!(MatchingParams::new(100, 3, f64::NAN).is_err());
    }

    #[test]
    fn run_k4_is_perfect() {
        let g = gen_circulant(4, 3).unwrap();
        for seed in 0..20 {
            let r = run(&g, &MatchingConfig::default(), seed).unwrap();
            assert_eq!(r.matching_size, 2);
            assert_eq!(r.unmatched, 0);
        }
    }

    #[test]
    fn run_with_audit_on_moderate_graph() {
        let g = gen_circulant(2000, 100).unwrap();
        let cfg = MatchingConfig {
            drift_audit: true,
            ..MatchingConfig::default()
        };
        let r = run(&g, &cfg, 4).unwrap();
        assert!(r.matching_size >= 1);
        assert!(r.window_steps > 0);
        assert_eq!(r.drift.failures, 0);
        assert!(r.sampled.len() == 4 && r.ledgers.iter().all(|l| l.total() >= 0.0));
        assert_eq!(r.unmatched + 2 * r.matching_size, 2000);
    }
}
