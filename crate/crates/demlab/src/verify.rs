//! Deterministic verification suites: exact identities, ODE cross-checks and drift oracles.

use num_rational::Ratio;
use serde::Serialize;

use demlab_core::balls_bins::BallsBinsState;
use demlab_core::er_components::{ComponentState, ORACLE_MAX_N};
use demlab_core::graph::{gen_circulant, gen_pairing};
use demlab_core::greedy_matching::MatchingState;
use demlab_core::seed::{derive_seed, rng_from_seed, uniform_below};
use demlab_core::trajectories::{
    balls_trajectory, components_trajectory, integrate_rk4, verify_tree_identity, BallsOde, ComponentsOde, OdeSolution,
    TREE_IDENTITY_MAX_K,
};

use crate::error::{HarnessError, Result};
use crate::registry::Verification;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyParams {
    pub kmax: u32,
    /// `balls`, `components` or `both`.
    pub system: String,
    pub kappa: usize,
    pub t_end: f64,
    pub h: f64,
    pub tol: f64,
    /// `balls`, `er`, `matching` or `all`.
    pub process: String,
    pub n: Option<u64>,
    pub d: u32,
    pub states: u64,
    pub seed: u64,
}

impl Default for VerifyParams {
    fn default() -> Self {
        Self {
            kmax: TREE_IDENTITY_MAX_K,
            system: "both".into(),
            kappa: 6,
            t_end: 3.0,
            h: 1e-3,
            tol: 1e-6,
            process: "all".into(),
            n: None,
            d: 3,
            states: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyCase {
    pub name: String,
    pub passed: bool,
    /// Measured error; zero for exact checks that passed.
    pub measured: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySummary {
    pub kind: String,
    pub cases: Vec<VerifyCase>,
    pub passed: bool,
}

impl VerifySummary {
    fn new(kind: &str, cases: Vec<VerifyCase>) -> Self {
        let passed = cases.iter().all(|c| c.passed);
        Self {
            kind: kind.into(),
            cases,
            passed,
        }
    }

    pub fn passed_count(&self) -> usize {
        self.cases.iter().filter(|c| c.passed).count()
    }
}

fn case(name: String, measured: f64, tolerance: f64) -> VerifyCase {
    VerifyCase {
        name,
        passed: measured <= tolerance,
        measured,
        tolerance,
    }
}

pub struct Identities;

impl Verification for Identities {
    fn name(&self) -> &'static str {
        "identities"
    }

    fn run(&self, params: &VerifyParams) -> Result<VerifySummary> {
        if !(1..=TREE_IDENTITY_MAX_K).contains(&params.kmax) {
            return Err(HarnessError::config(format!(
                "kmax must lie in 1..={TREE_IDENTITY_MAX_K}"
            )));
        }
        let mut cases = Vec::new();
        for k in 1..=params.kmax {
            let (lhs, rhs) = verify_tree_identity(k)?;
            cases.push(case(format!("tree identity k={k}"), lhs.abs_diff(rhs) as f64, 0.0));
        }
        Ok(VerifySummary::new(self.name(), cases))
    }
}

pub struct OdeCheck;

fn sup_error(sol: &OdeSolution, exact: impl Fn(usize, f64) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (t, y) in sol.times.iter().zip(&sol.states) {
        for (i, v) in y.iter().enumerate() {
            worst = worst.max((v - exact(i, *t)).abs());
        }
    }
    worst
}

impl Verification for OdeCheck {
    fn name(&self) -> &'static str {
        "ode"
    }

    fn run(&self, p: &VerifyParams) -> Result<VerifySummary> {
        let (balls, components) = match p.system.as_str() {
            "balls" => (true, false),
            "components" => (false, true),
            "both" => (true, true),
            other => return Err(HarnessError::config(format!("unknown ODE system {other:?}"))),
        };
        if p.kappa == 0 || p.kappa > 6 {
            return Err(HarnessError::config("ODE check supports 1 <= kappa <= 6"));
        }
        let mut cases = Vec::new();
        if balls {
            let sol = integrate_rk4(&BallsOde { kmax: p.kappa }, p.t_end, p.h)?;
            let err = sup_error(&sol, |i, t| balls_trajectory(i as u32, t).unwrap_or(f64::NAN));
            cases.push(case(
                format!("balls kappa={} t<={} h={}", p.kappa, p.t_end, p.h),
                err,
                p.tol,
            ));
        }
        if components {
            let sol = integrate_rk4(&ComponentsOde { kappa: p.kappa }, p.t_end, p.h)?;
            let err = sup_error(&sol, |i, t| components_trajectory(i as u32 + 1, t).unwrap_or(f64::NAN));
            cases.push(case(
                format!("components kappa={} t<={} h={}", p.kappa, p.t_end, p.h),
                err,
                p.tol,
            ));
        }
        Ok(VerifySummary::new(self.name(), cases))
    }
}

pub struct DriftOracles;

impl Verification for DriftOracles {
    fn name(&self) -> &'static str {
        "drift-oracles"
    }

    fn run(&self, p: &VerifyParams) -> Result<VerifySummary> {
        let mut cases = Vec::new();
        let all = p.process == "all";
        if !matches!(p.process.as_str(), "balls" | "er" | "matching" | "all") {
            return Err(HarnessError::config(format!(
                "unknown drift-oracle process {:?}",
                p.process
            )));
        }
        if all || p.process == "balls" {
            cases.push(balls_oracle(p.n.unwrap_or(12), p.states, p.seed)?);
        }
        if all || p.process == "er" {
            cases.push(er_oracle(p.n.unwrap_or(30), p.states, p.seed)?);
        }
        if all || p.process == "matching" {
            cases.extend(matching_oracle(p.n.unwrap_or(20), p.d, p.states, p.seed)?);
        }
        Ok(VerifySummary::new(self.name(), cases))
    }
}

/// Formula `(X_{k-1} - X_k)/n` against averaging over every bin.
fn balls_oracle(n: u64, states: u64, seed: u64) -> Result<VerifyCase> {
    if n == 0 || n > 1000 {
        return Err(HarnessError::config("balls drift oracle needs 1 <= n <= 1000"));
    }
    let mut rng = rng_from_seed(seed);
    let mut mismatches = 0u64;
    for trial in 0..states {
        let mut state = BallsBinsState::new(n, derive_seed(seed, trial))?;
        for _ in 0..uniform_below(&mut rng, 3 * n + 1) {
            state.place();
        }
        let top = state.loads().iter().copied().max().unwrap_or(0) as usize + 2;
        for k in 0..=top {
            let total: i64 = state
                .loads()
                .iter()
                .map(|&l| (l as usize + 1 == k) as i64 - (l as usize == k) as i64)
                .sum();
            if state.exact_drift(k) != total as f64 / n as f64 {
                mismatches += 1;
            }
        }
    }
    Ok(case(
        format!("balls n={n} states={states} exact"),
        mismatches as f64,
        0.0,
    ))
}

/// Formula drift against enumeration of every missing edge; slack `40 k^3 / n`.
fn er_oracle(n: u64, states: u64, seed: u64) -> Result<VerifyCase> {
    if !(2..=ORACLE_MAX_N).contains(&n) {
        return Err(HarnessError::config(format!(
            "er drift oracle needs 2 <= n <= {ORACLE_MAX_N}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut worst: f64 = 0.0;
    let mut checked = 0u64;
    while checked < states {
        let mut state = ComponentState::new(n, derive_seed(seed, checked))?;
        for _ in 0..uniform_below(&mut rng, state.max_edges()) {
            state.add_random_edge()?;
        }
        for k in 1..=5usize {
            let exact = ratio_f64(state.exact_drift_oracle(k)?);
            let slack = 40.0 * (k * k * k) as f64 / n as f64;
            worst = worst.max((exact - state.formula_drift(k)).abs() / slack);
        }
        checked += 1;
    }
    Ok(case(format!("er n={n} states={states} k<=5 gap/slack"), worst, 1.0))
}

fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `-sum D_u / |E|` against matching every alive edge in turn.
fn matching_oracle(n: u64, d: u32, states: u64, seed: u64) -> Result<Vec<VerifyCase>> {
    let n = u32::try_from(n).map_err(|_| HarnessError::config("n too large"))?;
    let fixed = [("C_4", gen_circulant(4, 2)?), ("K_4", gen_circulant(4, 3)?)];
    let mut cases = Vec::new();
    for (name, g) in &fixed {
        let state = MatchingState::new(g.graph(), seed);
        let mismatches = (0..4).filter(|&v| !matching_agrees(&state, v)).count();
        cases.push(case(format!("matching {name} exact"), mismatches as f64, 0.0));
    }
    let mut rng = rng_from_seed(seed);
    let (mut mismatches, mut checked, mut trial) = (0u64, 0u64, 0u64);
    while checked < states {
        if trial > 100 * states.max(1) {
            return Err(HarnessError::config(
                "matching drift oracle could not sample live states",
            ));
        }
        let g = gen_pairing(n, d, derive_seed(seed, trial))?;
        let mut state = MatchingState::new(g.graph(), derive_seed(seed ^ 1, trial));
        trial += 1;
        for _ in 0..uniform_below(&mut rng, n as u64 / 3 + 1) {
            state.step_random();
        }
        if state.is_halted() {
            continue;
        }
        mismatches += (0..n).filter(|&v| !matching_agrees(&state, v)).count() as u64;
        checked += 1;
    }
    cases.push(case(
        format!("matching n={n} d={d} states={states} exact"),
        mismatches as f64,
        0.0,
    ));
    Ok(cases)
}

fn matching_agrees(state: &MatchingState<'_>, v: u32) -> bool {
    let alive = state.alive_count();
    let mut total = 0i64;
    for idx in 0..alive {
        let mut next = state.clone();
        next.match_alive(idx);
        total += next.degree(v) as i64 - state.degree(v) as i64;
    }
    state.exact_drift_ratio(v).ok() == Some(Ratio::new(total, alive as i64))
}
