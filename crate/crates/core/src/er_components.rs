//! The random graph process: one uniformly random missing edge per step,
//! with the component-size histogram `Y_k` kept exact by union-find.

use std::collections::HashSet;
use std::sync::Arc;

use num_rational::Ratio;

use crate::envelope::{band, exceedance, Envelope, Violation};
use crate::error::{param, Error, Result};
use crate::seed::{rng_from_seed, uniform_below, SimRng};
use crate::series::{SeriesPoint, TrackedSeries};
use crate::trajectories::{components_family, ComponentsTrajectory, ErrorFunctionSpec};
use crate::transform::{MartingaleTransform, Sign};

/// Largest `n` accepted by the enumeration oracle.
pub const ORACLE_MAX_N: u64 = 30;

/// Largest tracked component order; `e^{6 kappa^3 t}` is useless beyond it.
pub const MAX_KAPPA: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeOutcome {
    pub u: u32,
    pub v: u32,
    /// Sizes of the two merged components, or `None` for an internal edge.
    pub merged: Option<(u64, u64)>,
}

#[derive(Debug, Clone)]
pub struct ComponentState {
    n: u64,
    step: u64,
    parent: Vec<u32>,
    size: Vec<u32>,
    /// `histogram[k]` = number of components with exactly `k` vertices.
    histogram: Vec<u64>,
    components: u64,
    edges: HashSet<u64>,
    rng: SimRng,
}

impl ComponentState {
    pub fn new(n: u64, seed: u64) -> Result<Self> {
        if n == 0 || n > u32::MAX as u64 {
            return Err(param(format!("random graph process needs 1 <= n < 2^32, got {n}")));
        }
        let mut histogram = vec![0; n as usize + 1];
        histogram[1] = n;
        Ok(Self {
            n,
            step: 0,
            parent: (0..n as u32).collect(),
            size: vec![1; n as usize],
            histogram,
            components: n,
            edges: HashSet::new(),
            rng: rng_from_seed(seed),
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn components(&self) -> u64 {
        self.components
    }

    pub fn histogram(&self) -> &[u64] {
        &self.histogram
    }

    /// `Y_k`.
    #[inline]
    pub fn count(&self, k: usize) -> u64 {
        self.histogram.get(k).copied().unwrap_or(0)
    }

    pub fn max_edges(&self) -> u64 {
        self.n * (self.n - 1) / 2
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.edges.contains(&self.key(u, v))
    }

    fn key(&self, u: u32, v: u32) -> u64 {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        a as u64 * self.n + b as u64
    }

    /// Root without path compression.
    pub fn root(&self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            x = self.parent[x as usize];
        }
        x
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    pub fn component_size(&self, v: u32) -> u64 {
        self.size[self.root(v) as usize] as u64
    }

    /// Adds the edge `{u, v}`, which must be absent and not a loop.
    pub fn add_edge(&mut self, u: u32, v: u32) -> Result<EdgeOutcome> {
        if u == v || u as u64 >= self.n || v as u64 >= self.n {
            return Err(param(format!("invalid edge {{{u}, {v}}}")));
        }
        if !self.edges.insert(self.key(u, v)) {
            return Err(param(format!("edge {{{u}, {v}}} already present")));
        }
        self.step += 1;
        let (mut ru, mut rv) = (self.find(u), self.find(v));
        if ru == rv {
            return Ok(EdgeOutcome { u, v, merged: None });
        }
        let (a, b) = (self.size[ru as usize] as u64, self.size[rv as usize] as u64);
        if a < b {
            std::mem::swap(&mut ru, &mut rv);
        }
        self.parent[rv as usize] = ru;
        self.size[ru as usize] = (a + b) as u32;
        self.histogram[a as usize] -= 1;
        self.histogram[b as usize] -= 1;
        self.histogram[(a + b) as usize] += 1;
        self.components -= 1;
        Ok(EdgeOutcome {
            u,
            v,
            merged: Some((a, b)),
        })
    }

    /// Adds one edge chosen uniformly from the missing edges.
    ///
    /// Pairs are drawn uniformly and rejected while present; above half
    /// density the missing edges are enumerated instead.
    pub fn add_random_edge(&mut self) -> Result<EdgeOutcome> {
        let max = self.max_edges();
        if self.step >= max {
            return Err(Error::Exhausted(format!("complete graph on {} vertices", self.n)));
        }
        let (u, v) = if 2 * self.step <= max {
            loop {
                let u = uniform_below(&mut self.rng, self.n) as u32;
                let mut v = uniform_below(&mut self.rng, self.n - 1) as u32;
                if v >= u {
                    v += 1;
                }
                if !self.has_edge(u, v) {
                    break (u, v);
                }
            }
        } else {
            let missing = self.missing_edges();
            missing[uniform_below(&mut self.rng, missing.len() as u64) as usize]
        };
        self.add_edge(u, v)
    }

    pub fn missing_edges(&self) -> Vec<(u32, u32)> {
        let n = self.n as u32;
        let mut out = Vec::with_capacity((self.max_edges() - self.step) as usize);
        for u in 0..n {
            for v in (u + 1)..n {
                if !self.has_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// `-2k Y_k / n + sum_{j=1}^{k-1} j (k-j) (Y_j / n) (Y_{k-j} / n)`.
    pub fn formula_drift(&self, k: usize) -> f64 {
        let nf = self.n as f64;
        let mut drift = -2.0 * k as f64 * self.count(k) as f64 / nf;
        for j in 1..k {
            drift += (j * (k - j)) as f64 * (self.count(j) as f64 / nf) * (self.count(k - j) as f64 / nf);
        }
        drift
    }

    /// `E[Y_k(i+1) - Y_k(i) | state]` by enumerating every missing edge.
    pub fn exact_drift_oracle(&self, k: usize) -> Result<Ratio<i64>> {
        if self.n > ORACLE_MAX_N {
            return Err(param(format!("oracle limited to n <= {ORACLE_MAX_N}, got {}", self.n)));
        }
        let missing = self.missing_edges();
        if missing.is_empty() {
            return Err(Error::Exhausted("no missing edges".into()));
        }
        let k = k as u64;
        let mut total: i64 = 0;
        for &(u, v) in &missing {
            let (ru, rv) = (self.root(u), self.root(v));
            if ru == rv {
                continue;
            }
            let (a, b) = (self.size[ru as usize] as u64, self.size[rv as usize] as u64);
            total -= (a == k) as i64 + (b == k) as i64;
            total += (a + b == k) as i64;
        }
        Ok(Ratio::new(total, missing.len() as i64))
    }

    /// Vertex conservation, component count and edge count.
    pub fn audit(&self) -> bool {
        let vertices: u64 = self.histogram.iter().enumerate().map(|(k, &c)| k as u64 * c).sum();
        let comps: u64 = self.histogram.iter().sum();
        vertices == self.n && comps == self.components && self.edges.len() as u64 == self.step
    }
}

#[derive(Debug, Clone)]
pub struct ComponentsConfig {
    pub n: u64,
    pub c: f64,
    pub kappa: usize,
    pub stride: u64,
}

impl ComponentsConfig {
    pub fn steps(&self) -> u64 {
        (self.c * self.n as f64).floor() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(param("random graph process needs n >= 2"));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(param(format!("c must be positive, got {}", self.c)));
        }
        if self.kappa == 0 || self.kappa > MAX_KAPPA {
            return Err(param(format!("kappa must lie in 1..={MAX_KAPPA}, got {}", self.kappa)));
        }
        let max = self.n * (self.n - 1) / 2;
        if self.steps() > max {
            return Err(param(format!(
                "m = floor(c n) = {} exceeds C(n, 2) = {max}",
                self.steps()
            )));
        }
        Ok(())
    }
}

/// Drift-chain checks on steps where the good event holds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComponentsDriftAudit {
    pub checked_steps: u64,
    /// Steps where the formula drift exceeded its envelope-adjusted bound.
    pub bound_failures: u64,
    /// Steps with `eps(t) <= 1` where `bound - n (y_k + eps)(t_{i+1}) + n (y_k + eps)(t_i) > 0`.
    pub shift_failures: u64,
    /// Steps checked with `eps(t) <= 1`.
    pub small_eps_steps: u64,
    /// Per `k`: largest `bound - n delta(y_k + eps)` over steps with `eps(t) <= 1`.
    pub max_shifted_bound: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ComponentsRun {
    pub config: ComponentsConfig,
    pub seed: u64,
    pub series: Vec<TrackedSeries>,
    pub plus: Vec<MartingaleTransform>,
    pub minus: Vec<MartingaleTransform>,
    pub violation: Option<Violation>,
    pub final_histogram: Vec<u64>,
    pub drift: ComponentsDriftAudit,
    /// Largest `|Y_k(i+1) - Y_k(i)|` over the run.
    pub max_increment: u64,
    /// Component count dropped by one exactly on merging edges.
    pub component_law_held: bool,
    pub max_deviation_ratio: f64,
}

impl ComponentsRun {
    pub fn final_counts(&self) -> Vec<u64> {
        (1..=self.config.kappa)
            .map(|k| self.final_histogram.get(k).copied().unwrap_or(0))
            .collect()
    }
}

pub fn series_id(k: usize) -> String {
    format!("Y_{k}")
}

/// `-2k (y_k - eps) + sum_j j (k-j) (y_j + eps) (y_{k-j} + eps)`; `traj[k-1] = y_k`.
pub fn envelope_drift_bound(traj: &[f64], k: usize, eps: f64) -> f64 {
    let mut bound = -2.0 * k as f64 * (traj[k - 1] - eps);
    for j in 1..k {
        bound += (j * (k - j)) as f64 * (traj[j - 1] + eps) * (traj[k - j - 1] + eps);
    }
    bound
}

pub fn run(config: &ComponentsConfig, seed: u64) -> Result<ComponentsRun> {
    config.validate()?;
    let n = config.n;
    let nf = n as f64;
    let kappa = config.kappa;
    let stride = config.stride.max(1);
    let error = ErrorFunctionSpec::components(n, kappa as u32)?;
    let envelope = Envelope::new(Arc::new(error), nf);
    let m = config.steps();

    let mut state = ComponentState::new(n, seed)?;
    let mut traj = vec![0.0; kappa];
    let mut traj_next = vec![0.0; kappa];
    components_family(0.0, &mut traj);
    let mut eps = error.eps(0.0);

    let mut series: Vec<TrackedSeries> = (1..=kappa).map(|k| TrackedSeries::new(series_id(k), stride)).collect();
    let mut plus = Vec::with_capacity(kappa);
    let mut minus = Vec::with_capacity(kappa);
    for k in 1..=kappa {
        let y0 = state.count(k) as f64;
        let trajectory = Arc::new(ComponentsTrajectory { k: k as u32 });
        plus.push(MartingaleTransform::start(
            Sign::Plus,
            trajectory.clone(),
            envelope.clone(),
            y0,
            stride,
        ));
        minus.push(MartingaleTransform::start(
            Sign::Minus,
            trajectory,
            envelope.clone(),
            y0,
            stride,
        ));
    }

    let mut audit = ComponentsDriftAudit {
        max_shifted_bound: vec![f64::NEG_INFINITY; kappa],
        ..Default::default()
    };
    let mut violation = None;
    let mut max_ratio: f64 = 0.0;
    let mut max_increment = 0u64;
    let mut law_held = true;
    let mut previous = vec![0u64; kappa];

    let mut good = observe(&state, 0, &traj, eps, nf, &mut series, &mut violation, &mut max_ratio);
    for (k, slot) in previous.iter_mut().enumerate() {
        *slot = state.count(k + 1);
    }

    for i in 0..m {
        let next = i + 1;
        let t_next = next as f64 / nf;
        components_family(t_next, &mut traj_next);
        let eps_next = error.eps(t_next);

        if good {
            audit.checked_steps += 1;
            let small = eps <= 1.0 && eps_next.is_finite();
            if small {
                audit.small_eps_steps += 1;
            }
            let (mut bound_failed, mut shift_failed) = (false, false);
            for k in 1..=kappa {
                let bound = envelope_drift_bound(&traj, k, eps);
                if state.formula_drift(k) > bound {
                    bound_failed = true;
                }
                if small {
                    let shifted = bound - nf * ((traj_next[k - 1] + eps_next) - (traj[k - 1] + eps));
                    audit.max_shifted_bound[k - 1] = audit.max_shifted_bound[k - 1].max(shifted);
                    if shifted > 0.0 {
                        shift_failed = true;
                    }
                }
            }
            audit.bound_failures += bound_failed as u64;
            audit.shift_failures += shift_failed as u64;
        }

        let before = state.components();
        let outcome = state.add_random_edge()?;
        let expected = before - outcome.merged.is_some() as u64;
        if state.components() != expected {
            law_held = false;
        }
        for k in 1..=kappa {
            let value = state.count(k);
            max_increment = max_increment.max(value.abs_diff(previous[k - 1]));
            previous[k - 1] = value;
            plus[k - 1].advance_with(next, value as f64, traj_next[k - 1], eps_next, good);
            minus[k - 1].advance_with(next, value as f64, traj_next[k - 1], eps_next, good);
        }
        let inside = observe(
            &state,
            next,
            &traj_next,
            eps_next,
            nf,
            &mut series,
            &mut violation,
            &mut max_ratio,
        );
        good = good && inside;
        std::mem::swap(&mut traj, &mut traj_next);
        eps = eps_next;
    }

    for s in &mut series {
        s.seal();
    }
    for t in plus.iter_mut().chain(minus.iter_mut()) {
        t.seal();
    }

    Ok(ComponentsRun {
        config: config.clone(),
        seed,
        series,
        plus,
        minus,
        violation,
        final_histogram: state.histogram()[..=kappa.min(n as usize)].to_vec(),
        drift: audit,
        max_increment,
        component_law_held: law_held,
        max_deviation_ratio: max_ratio,
    })
}

#[allow(clippy::too_many_arguments)]
fn observe(
    state: &ComponentState,
    step: u64,
    traj: &[f64],
    eps: f64,
    nf: f64,
    series: &mut [TrackedSeries],
    violation: &mut Option<Violation>,
    max_ratio: &mut f64,
) -> bool {
    let mut inside = true;
    for (idx, s) in series.iter_mut().enumerate() {
        let k = idx + 1;
        let value = state.count(k) as f64;
        let (lo, hi) = band(nf, traj[idx], eps);
        let reference = nf * traj[idx];
        let ratio = (value - reference).abs() / (nf * eps);
        if ratio > *max_ratio {
            *max_ratio = ratio;
        }
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
        s.observe(SeriesPoint {
            step,
            value,
            reference,
            lo,
            hi,
            drift: Some(state.formula_drift(k)),
        });
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_examples() {
        let s = ComponentState::new(4, 0).unwrap();
        assert_eq!(s.count(1), 4);
        assert_eq!(s.components(), 4);
        assert!(s.audit());
        assert!(ComponentState::new(0, 0).is_err());
    }

    #[test]
    fn step_examples() {
        let mut s = ComponentState::new(2, 0).unwrap();
        let e = s.add_random_edge().unwrap();
        assert_eq!(e.merged, Some((1, 1)));
        assert_eq!((s.count(1), s.count(2)), (0, 1));
        assert!(matches!(s.add_random_edge(), Err(Error::Exhausted(_))));

        // merge a path on 2 with a path on 3
        let mut s = ComponentState::new(5, 0).unwrap();
        s.add_edge(0, 1).unwrap();
        s.add_edge(2, 3).unwrap();
        s.add_edge(3, 4).unwrap();
        assert_eq!((s.count(2), s.count(3), s.count(5)), (1, 1, 0));
        let e = s.add_edge(1, 2).unwrap();
        assert_eq!(e.merged.map(|(a, b)| a + b), Some(5));
        assert_eq!((s.count(2), s.count(3), s.count(5)), (0, 0, 1));

        // internal edge
        let mut s = ComponentState::new(3, 0).unwrap();
        s.add_edge(0, 1).unwrap();
        s.add_edge(1, 2).unwrap();
        let before = s.histogram().to_vec();
        let e = s.add_edge(0, 2).unwrap();
        assert_eq!(e.merged, None);
        assert_eq!(s.histogram(), &before[..]);
        assert_eq!(s.components(), 1);
        assert!(s.add_edge(0, 2).is_err());
        assert!(s.add_edge(1, 1).is_err());
    }

    #[test]
    fn formula_drift_examples() {
        let s = ComponentState::new(100, 0).unwrap();
        assert_eq!(s.formula_drift(1), -2.0);
        assert_eq!(s.formula_drift(2), 1.0);
        let mut s = ComponentState::new(4, 0).unwrap();
        s.add_edge(0, 1).unwrap();
        s.add_edge(2, 3).unwrap();
        assert_eq!(s.formula_drift(1), 0.0);
    }

    #[test]
    fn oracle_examples() {
        let mut s = ComponentState::new(4, 0).unwrap();
        s.add_edge(0, 1).unwrap();
        assert_eq!(s.exact_drift_oracle(1).unwrap(), Ratio::new(-6, 5));
        assert_eq!(s.exact_drift_oracle(2).unwrap(), Ratio::new(-3, 5));

        let mut s = ComponentState::new(3, 0).unwrap();
        s.add_edge(0, 1).unwrap();
        s.add_edge(1, 2).unwrap();
        assert_eq!(s.exact_drift_oracle(3).unwrap(), Ratio::from_integer(0));
        s.add_edge(0, 2).unwrap();
        assert!(s.exact_drift_oracle(3).is_err());

        assert!(ComponentState::new(31, 0).unwrap().exact_drift_oracle(1).is_err());
    }

    #[test]
    fn dense_sampling_reaches_complete_graph() {
        let mut s = ComponentState::new(8, 3).unwrap();
        for _ in 0..28 {
            s.add_random_edge().unwrap();
            assert!(s.audit());
        }
        assert_eq!(s.components(), 1);
        assert!(s.add_random_edge().is_err());
    }

    #[test]
    fn config_validation() {
        let ok = ComponentsConfig {
            n: 100,
            c: 0.5,
            kappa: 4,
            stride: 1,
        };
        assert!(ok.validate().is_ok());
        assert!(ComponentsConfig { c: 0.0, ..ok.clone() }.validate().is_err());
        assert!(ComponentsConfig { kappa: 7, ..ok.clone() }.validate().is_err());
        assert!(ComponentsConfig { n: 4, c: 2.0, ..ok }.validate().is_err());
    }

    #[test]
    fn zero_steps_is_inside() {
        let cfg = ComponentsConfig {
            n: 1000,
            c: 0.0005,
            kappa: 3,
            stride: 1,
        };
        let r = run(&cfg, 1).unwrap();
        assert!(r.violation.is_none());
        assert_eq!(r.final_counts(), vec![1000, 0, 0]);
    }
}
