//! Balls into bins: occupancy histogram, exact drifts and envelope runs.

use std::sync::Arc;

use crate::envelope::{band, exceedance, CriticalIntervalMonitor, CriticalTransition, Envelope, Violation};
use crate::error::{param, Result};
use crate::seed::{rng_from_seed, uniform_index, SimRng};
use crate::series::{SeriesPoint, TrackedSeries};
use crate::trajectories::{balls_family, BallsTrajectory, ErrorFunctionSpec};
use crate::transform::{MartingaleTransform, Sign};

/// `n` bins, `i` balls placed, and the exact load histogram.
#[derive(Debug, Clone)]
pub struct BallsBinsState {
    n: u64,
    step: u64,
    loads: Vec<u32>,
    /// `histogram[l]` = number of bins holding exactly `l` balls.
    histogram: Vec<u64>,
    rng: SimRng,
}

impl BallsBinsState {
    pub fn new(n: u64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(param("balls-bins needs n >= 1"));
        }
        Ok(Self {
            n,
            step: 0,
            loads: vec![0; n as usize],
            histogram: vec![n],
            rng: rng_from_seed(seed),
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn histogram(&self) -> &[u64] {
        &self.histogram
    }

    pub fn loads(&self) -> &[u32] {
        &self.loads
    }

    /// `X_k`, the number of bins with exactly `k` balls.
    #[inline]
    pub fn count(&self, k: usize) -> u64 {
        self.histogram.get(k).copied().unwrap_or(0)
    }

    /// Places one ball into a uniformly random bin; returns the bin.
    #[inline]
    pub fn place(&mut self) -> usize {
        let bin = uniform_index(&mut self.rng, self.loads.len());
        self.place_in(bin);
        bin
    }

    /// Places one ball into `bin` (used by exhaustive oracles).
    #[inline]
    pub fn place_in(&mut self, bin: usize) {
        let load = self.loads[bin] as usize;
        self.loads[bin] += 1;
        self.histogram[load] -= 1;
        if load + 1 == self.histogram.len() {
            self.histogram.push(0);
        }
        self.histogram[load + 1] += 1;
        self.step += 1;
    }

    /// `E[X_k(i+1) - X_k(i) | state] = (X_{k-1} - X_k) / n` with `X_{-1} = 0`.
    #[inline]
    pub fn exact_drift(&self, k: usize) -> f64 {
        let prev = if k == 0 { 0 } else { self.count(k - 1) };
        (prev as f64 - self.count(k) as f64) / self.n as f64
    }

    /// Conservation laws and agreement between histogram and per-bin loads.
    pub fn audit(&self) -> bool {
        let total: u64 = self.histogram.iter().sum();
        let balls: u64 = self.histogram.iter().enumerate().map(|(l, &c)| l as u64 * c).sum();
        if total != self.n || balls != self.step {
            return false;
        }
        let mut recount = vec![0u64; self.histogram.len()];
        for &load in &self.loads {
            match recount.get_mut(load as usize) {
                Some(c) => *c += 1,
                None => return false,
            }
        }
        recount == self.histogram
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BallsEnvelope {
    /// `eps = n^{-1/3} e^{3t}`, valid while `m <= n ln n / 9`.
    Basic,
    /// `delta, eps = n^{-1/2+alpha/2} (1/2 + t, 1 + t)`, valid while `m <= (1/2 - alpha) n ln n`.
    SelfCorrect { alpha: f64 },
}

impl BallsEnvelope {
    pub fn name(&self) -> &'static str {
        match self {
            BallsEnvelope::Basic => "basic",
            BallsEnvelope::SelfCorrect { .. } => "selfcorrect",
        }
    }

    pub fn error_function(&self, n: u64) -> Result<ErrorFunctionSpec> {
        match *self {
            BallsEnvelope::Basic => ErrorFunctionSpec::balls_basic(n),
            BallsEnvelope::SelfCorrect { alpha } => ErrorFunctionSpec::balls_self_correct(n, alpha),
        }
    }

    /// Largest admissible number of balls for `n` bins.
    pub fn max_steps(&self, n: u64) -> u64 {
        let nf = n as f64;
        let factor = match *self {
            BallsEnvelope::Basic => 1.0 / 9.0,
            BallsEnvelope::SelfCorrect { alpha } => 0.5 - alpha,
        };
        (factor * nf * nf.ln()).floor().max(0.0) as u64
    }
}

#[derive(Debug, Clone)]
pub struct BallsBinsConfig {
    pub n: u64,
    pub m: u64,
    pub kappa: usize,
    pub envelope: BallsEnvelope,
    pub stride: u64,
}

impl BallsBinsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(param("balls-bins needs n >= 1"));
        }
        if self.kappa > 64 {
            return Err(param(format!("kappa {} is too large", self.kappa)));
        }
        self.envelope.error_function(self.n)?;
        let max = self.envelope.max_steps(self.n);
        if self.m > max {
            return Err(param(format!(
                "m = {} exceeds the {} envelope horizon {} for n = {}",
                self.m,
                self.envelope.name(),
                max,
                self.n
            )));
        }
        Ok(())
    }
}

/// Sign checks of the exact transform drift on steps where the good event holds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DriftAudit {
    pub checked_steps: u64,
    /// Per tracked variable: largest `E[dX^+ | state]` seen (should be <= 0).
    pub max_plus_drift: Vec<f64>,
    /// Per tracked variable: smallest `E[dX^- | state]` seen (should be >= 0).
    pub min_minus_drift: Vec<f64>,
    /// Steps with some `E[dX^+] > 0` or `E[dX^-] < 0`.
    pub sign_failures: u64,
    /// Steps checked inside a critical interval (self-correcting envelope only).
    pub critical_steps: u64,
    /// Largest `E[dX^+]` seen while inside the critical interval.
    pub max_plus_drift_critical: f64,
}

impl DriftAudit {
    fn new(len: usize) -> Self {
        Self {
            max_plus_drift: vec![f64::NEG_INFINITY; len],
            min_minus_drift: vec![f64::INFINITY; len],
            max_plus_drift_critical: f64::NEG_INFINITY,
            ..Self::default()
        }
    }

    pub fn holds(&self) -> bool {
        self.sign_failures == 0
    }
}

/// A stay of `X_k` in its critical interval.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalEpisode {
    pub k: usize,
    pub entry_step: u64,
    /// First step after the stay; `None` when still inside at the end.
    pub exit_step: Option<u64>,
    pub exited_above: bool,
    /// `X_k(j) - n (x_k + eps)(t_j)`.
    pub start_value: f64,
    /// `n (eps - delta)(t_j)`.
    pub lambda: f64,
    /// Largest `X_k^+(i) - X_k^+(j)` over the stay.
    pub max_rise: f64,
}

#[derive(Debug, Clone)]
pub struct BallsBinsRun {
    pub config: BallsBinsConfig,
    pub seed: u64,
    pub series: Vec<TrackedSeries>,
    pub plus: Vec<MartingaleTransform>,
    pub minus: Vec<MartingaleTransform>,
    pub violation: Option<Violation>,
    pub final_histogram: Vec<u64>,
    pub drift: DriftAudit,
    pub episodes: Vec<CriticalEpisode>,
    /// Largest `|X_k - n x_k| / (n eps)` over all steps and tracked `k`.
    pub max_deviation_ratio: f64,
}

impl BallsBinsRun {
    pub fn final_counts(&self) -> Vec<u64> {
        (0..=self.config.kappa)
            .map(|k| self.final_histogram.get(k).copied().unwrap_or(0))
            .collect()
    }
}

pub fn series_id(k: usize) -> String {
    format!("X_{k}")
}

/// Runs `m` steps from the empty configuration and checks the envelope every step.
pub fn run(config: &BallsBinsConfig, seed: u64) -> Result<BallsBinsRun> {
    config.validate()?;
    let n = config.n;
    let nf = n as f64;
    let tracked = config.kappa + 1;
    let stride = config.stride.max(1);
    let error = config.envelope.error_function(n)?;
    let envelope = Envelope::new(Arc::new(error), nf);
    let critical = matches!(config.envelope, BallsEnvelope::SelfCorrect { .. });

    let mut state = BallsBinsState::new(n, seed)?;
    let mut traj = vec![0.0; tracked];
    let mut traj_next = vec![0.0; tracked];
    balls_family(0.0, &mut traj);
    let mut eps = error.eps(0.0);

    let mut series: Vec<TrackedSeries> = (0..tracked).map(|k| TrackedSeries::new(series_id(k), stride)).collect();
    let mut plus = Vec::with_capacity(tracked);
    let mut minus = Vec::with_capacity(tracked);
    for k in 0..tracked {
        let x0 = state.count(k) as f64;
        let trajectory = Arc::new(BallsTrajectory { k: k as u32 });
        plus.push(MartingaleTransform::start(
            Sign::Plus,
            trajectory.clone(),
            envelope.clone(),
            x0,
            stride,
        ));
        minus.push(MartingaleTransform::start(
            Sign::Minus,
            trajectory,
            envelope.clone(),
            x0,
            stride,
        ));
    }
    let mut monitors = vec![CriticalIntervalMonitor::new(); if critical { tracked } else { 0 }];
    let mut open: Vec<Option<usize>> = vec![None; monitors.len()];
    let mut episodes = Vec::new();
    let mut audit = DriftAudit::new(tracked);
    let mut violation: Option<Violation> = None;
    let mut max_ratio: f64 = 0.0;

    // step 0
    let mut good = observe_step(&state, 0, &traj, eps, nf, &mut series, &mut violation, &mut max_ratio);
    if critical {
        let delta = error.del(0.0).unwrap_or(0.0);
        for (k, monitor) in monitors.iter_mut().enumerate() {
            monitor.update_with(state.count(k) as f64, 0, nf * (traj[k] + delta), nf * (traj[k] + eps));
        }
    }

    for i in 0..config.m {
        let next = i + 1;
        let t_next = next as f64 / nf;
        balls_family(t_next, &mut traj_next);
        let eps_next = error.eps(t_next);

        if good {
            audit.checked_steps += 1;
            let mut failed = false;
            for k in 0..tracked {
                let drift = state.exact_drift(k);
                let plus_drift = drift - nf * ((traj_next[k] + eps_next) - (traj[k] + eps));
                let minus_drift = drift - nf * ((traj_next[k] - eps_next) - (traj[k] - eps));
                audit.max_plus_drift[k] = audit.max_plus_drift[k].max(plus_drift);
                audit.min_minus_drift[k] = audit.min_minus_drift[k].min(minus_drift);
                if critical && monitors[k].inside() {
                    audit.critical_steps += 1;
                    audit.max_plus_drift_critical = audit.max_plus_drift_critical.max(plus_drift);
                } else if !critical && (plus_drift > 0.0 || minus_drift < 0.0) {
                    failed = true;
                }
                if critical && monitors[k].inside() && plus_drift > 0.0 {
                    failed = true;
                }
            }
            if failed {
                audit.sign_failures += 1;
            }
        }

        state.place();
        for k in 0..tracked {
            let value = state.count(k) as f64;
            plus[k].advance_with(next, value, traj_next[k], eps_next, good);
            minus[k].advance_with(next, value, traj_next[k], eps_next, good);
        }
        let inside = observe_step(
            &state,
            next,
            &traj_next,
            eps_next,
            nf,
            &mut series,
            &mut violation,
            &mut max_ratio,
        );

        if critical {
            let delta = error.del(t_next).unwrap_or(0.0);
            for k in 0..tracked {
                let value = state.count(k) as f64;
                let hi = nf * (traj_next[k] + eps_next);
                let lo = nf * (traj_next[k] + delta);
                let transform = value - hi;
                match monitors[k].update_with(value, next, lo, hi) {
                    CriticalTransition::Entered(j) => {
                        open[k] = Some(episodes.len());
                        episodes.push(CriticalEpisode {
                            k,
                            entry_step: j,
                            exit_step: None,
                            exited_above: false,
                            start_value: transform,
                            lambda: nf * (eps_next - delta),
                            max_rise: 0.0,
                        });
                    }
                    CriticalTransition::Stayed => {
                        if let Some(e) = open[k] {
                            let ep = &mut episodes[e];
                            ep.max_rise = ep.max_rise.max(transform - ep.start_value);
                        }
                    }
                    CriticalTransition::ExitedBelow | CriticalTransition::ExitedAbove => {
                        if let Some(e) = open[k].take() {
                            let ep = &mut episodes[e];
                            ep.max_rise = ep.max_rise.max(transform - ep.start_value);
                            ep.exit_step = Some(next);
                            ep.exited_above = value > hi;
                        }
                    }
                    CriticalTransition::Outside => {}
                }
            }
        }

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

    Ok(BallsBinsRun {
        config: config.clone(),
        seed,
        series,
        plus,
        minus,
        violation,
        final_histogram: state.histogram().to_vec(),
        drift: audit,
        episodes,
        max_deviation_ratio: max_ratio,
    })
}

/// Records the tracked counts at `step`; returns whether all lie in the band.
#[allow(clippy::too_many_arguments)]
#[inline]
fn observe_step(
    state: &BallsBinsState,
    step: u64,
    traj: &[f64],
    eps: f64,
    nf: f64,
    series: &mut [TrackedSeries],
    violation: &mut Option<Violation>,
    max_ratio: &mut f64,
) -> bool {
    let mut inside = true;
    for (k, s) in series.iter_mut().enumerate() {
        let value = state.count(k) as f64;
        let (lo, hi) = band(nf, traj[k], eps);
        let reference = nf * traj[k];
        let ratio = (value - reference).abs() / (nf * eps);
        if ratio > *max_ratio {
            *max_ratio = ratio;
        }
        if let Some(ex) = exceedance(value, lo, hi) {
            inside = false;
            if violation.is_none() {
                *violation = Some(Violation {
                    index: k,
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
            drift: Some(state.exact_drift(k)),
        });
    }
    inside
}
