//! Deterministic trajectories, error functions and the ODE systems they solve.
//!
//! Three trajectory families are provided:
//!
//! * balls-and-bins occupancy: `x_k(t) = t^k e^{-t} / k!`, solving
//!   `x_k' = -x_k + x_{k-1}` with `x_{-1} = 0` and `x(0) = (1, 0, ...)`;
//! * component counts: `y_k(t) = k^{k-2}/k! (2t)^{k-1} e^{-2kt}`, solving
//!   `y_k' = -2k y_k + sum_{j=1}^{k-1} j (k-j) y_j y_{k-j}`;
//! * matching degrees: `d p(t)` with `p(t) = 1 - 2t`.
//!
//! Closed forms are evaluated directly for `k <= 20` and in log space above.

use std::fmt::Debug;

use crate::envelope::ErrorFunction;
use crate::error::{domain, param, Error, Result};

/// Largest index evaluated with direct powers and factorials.
const DIRECT_LIMIT: u32 = 20;

/// A deterministic function of time around which a tracked variable concentrates.
pub trait Trajectory: Send + Sync + Debug {
    fn value(&self, t: f64) -> f64;
}

fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

fn factorial(k: u32) -> f64 {
    (2..=k).map(|j| j as f64).product()
}

/// `t^k e^{-t} / k!`.
pub fn balls_trajectory(k: u32, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(domain(format!("balls trajectory needs t >= 0, got {t}")));
    }
    Ok(balls_unchecked(k, t))
}

fn balls_unchecked(k: u32, t: f64) -> f64 {
    if k == 0 {
        return (-t).exp();
    }
    if t == 0.0 {
        return 0.0;
    }
    if k <= DIRECT_LIMIT {
        t.powi(k as i32) * (-t).exp() / factorial(k)
    } else {
        (k as f64 * t.ln() - t - ln_factorial(k)).exp()
    }
}

/// Fills `out[k] = x_k(t)` for `k = 0..out.len()` with a single exponential.
pub fn balls_family(t: f64, out: &mut [f64]) {
    let mut term = (-t).exp();
    for (k, slot) in out.iter_mut().enumerate() {
        if k > 0 {
            term *= t / k as f64;
        }
        *slot = term;
    }
}

/// `k^{k-2} / k! (2t)^{k-1} e^{-2kt}`, defined for `k >= 1`.
pub fn components_trajectory(k: u32, t: f64) -> Result<f64> {
    if k == 0 {
        return Err(domain("component trajectory needs k >= 1"));
    }
    if !(t >= 0.0) {
        return Err(domain(format!("component trajectory needs t >= 0, got {t}")));
    }
    Ok(components_unchecked(k, t))
}

fn components_unchecked(k: u32, t: f64) -> f64 {
    let kf = k as f64;
    if k == 1 {
        return (-2.0 * t).exp();
    }
    if t == 0.0 {
        return 0.0;
    }
    if k <= DIRECT_LIMIT {
        kf.powi(k as i32 - 2) / factorial(k) * (2.0 * t).powi(k as i32 - 1) * (-2.0 * kf * t).exp()
    } else {
        ((kf - 2.0) * kf.ln() - ln_factorial(k) + (kf - 1.0) * (2.0 * t).ln() - 2.0 * kf * t).exp()
    }
}

/// Fills `out[k - 1] = y_k(t)` for `k = 1..=out.len()`.
pub fn components_family(t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let decay = (-2.0 * t).exp();
    let two_t = 2.0 * t;
    // y_k = k^{k-2}/k! * (2t)^{k-1} * decay^k
    let mut decay_pow = decay;
    let mut two_t_pow = 1.0;
    for (idx, slot) in out.iter_mut().enumerate() {
        let k = idx as u32 + 1;
        if k > DIRECT_LIMIT {
            *slot = components_unchecked(k, t);
            continue;
        }
        let kf = k as f64;
        *slot = kf.powi(k as i32 - 2) / factorial(k) * two_t_pow * decay_pow;
        two_t_pow *= two_t;
        decay_pow *= decay;
    }
}

/// `d (1 - 2t)` on `[0, 1/2]`.
pub fn matching_trajectory(d: u64, t: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&t) {
        return Err(domain(format!("matching trajectory needs t in [0, 1/2], got {t}")));
    }
    Ok(d as f64 * (1.0 - 2.0 * t))
}

pub fn remaining_fraction(t: f64) -> f64 {
    1.0 - 2.0 * t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallsTrajectory {
    pub k: u32,
}

impl Trajectory for BallsTrajectory {
    fn value(&self, t: f64) -> f64 {
        balls_unchecked(self.k, t.max(0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentsTrajectory {
    pub k: u32,
}

impl Trajectory for ComponentsTrajectory {
    fn value(&self, t: f64) -> f64 {
        components_unchecked(self.k.max(1), t.max(0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchingDegreeTrajectory {
    pub d: u64,
}

impl Trajectory for MatchingDegreeTrajectory {
    fn value(&self, t: f64) -> f64 {
        self.d as f64 * remaining_fraction(t)
    }
}

/// Constant trajectory; mostly useful in tests and fixtures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantTrajectory(pub f64);

impl Trajectory for ConstantTrajectory {
    fn value(&self, _t: f64) -> f64 {
        self.0
    }
}

/// The four error-function shapes used by the processes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorVariant {
    /// `eps = n^{-1/3} e^{3t}`.
    BallsBasic { n: u64 },
    /// `delta = n^{-1/2+a/2} (1/2 + t)`, `eps = n^{-1/2+a/2} (1 + t)`.
    BallsSelfCorrect { n: u64, alpha: f64 },
    /// `eps = n^{-1/3} e^{6 kappa^3 t}`.
    Components { n: u64, kappa: u32 },
    /// `eps = s p(t)^{-4}`, `p(t) = 1 - 2t`.
    Matching { s: f64, d: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorFunctionSpec {
    variant: ErrorVariant,
    coeff: f64,
    rate: f64,
}

impl ErrorFunctionSpec {
    pub fn balls_basic(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(param("n must be positive"));
        }
        Ok(Self {
            variant: ErrorVariant::BallsBasic { n },
            coeff: 1.0 / (n as f64).cbrt(),
            rate: 3.0,
        })
    }

    pub fn balls_self_correct(n: u64, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(param("n must be positive"));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(param(format!("alpha must lie in (0, 1/2), got {alpha}")));
        }
        Ok(Self {
            variant: ErrorVariant::BallsSelfCorrect { n, alpha },
            coeff: (n as f64).powf(-0.5 + alpha / 2.0),
            rate: 0.0,
        })
    }

    pub fn components(n: u64, kappa: u32) -> Result<Self> {
        if n == 0 || kappa == 0 {
            return Err(param("n and kappa must be positive"));
        }
        let k = kappa as f64;
        Ok(Self {
            variant: ErrorVariant::Components { n, kappa },
            coeff: 1.0 / (n as f64).cbrt(),
            rate: 6.0 * k * k * k,
        })
    }

    pub fn matching(s: f64, d: u64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(param(format!("matching scale s must be positive, got {s}")));
        }
        Ok(Self {
            variant: ErrorVariant::Matching { s, d },
            coeff: s,
            rate: 0.0,
        })
    }

    pub fn variant(&self) -> ErrorVariant {
        self.variant
    }

    /// `(eps, delta)` at `t`.
    pub fn eval(&self, t: f64) -> Result<(f64, Option<f64>)> {
        if let ErrorVariant::Matching { .. } = self.variant {
            let p = remaining_fraction(t);
            if !(p > 0.0) {
                return Err(domain(format!("matching error function needs p(t) > 0, t = {t}")));
            }
        }
        Ok((self.eps(t), self.del(t)))
    }

    #[inline]
    pub fn eps(&self, t: f64) -> f64 {
        match self.variant {
            ErrorVariant::BallsBasic { .. } | ErrorVariant::Components { .. } => self.coeff * (self.rate * t).exp(),
            ErrorVariant::BallsSelfCorrect { .. } => self.coeff * (1.0 + t),
            ErrorVariant::Matching { .. } => {
                let p = remaining_fraction(t);
                if p > 0.0 {
                    self.coeff / (p * p * p * p)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    #[inline]
    pub fn del(&self, t: f64) -> Option<f64> {
        match self.variant {
            ErrorVariant::BallsSelfCorrect { .. } => Some(self.coeff * (0.5 + t)),
            _ => None,
        }
    }

    /// Threshold `(s/d)^{1/5}` below which the matching envelope is vacuous.
    pub fn matching_p_threshold(&self) -> Option<f64> {
        match self.variant {
            ErrorVariant::Matching { s, d } => Some((s / d as f64).powf(0.2)),
            _ => None,
        }
    }
}

impl ErrorFunction for ErrorFunctionSpec {
    fn epsilon(&self, t: f64) -> f64 {
        self.eps(t)
    }

    fn delta(&self, t: f64) -> Option<f64> {
        self.del(t)
    }
}

/// Right-hand side of an autonomous-in-structure ODE system `y' = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn initial(&self) -> Vec<f64>;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

/// `x_k' = -x_k + x_{k-1}` for `k = 0..=kmax`.
#[derive(Debug, Clone, Copy)]
pub struct BallsOde {
    pub kmax: usize,
}

impl OdeSystem for BallsOde {
    fn dim(&self) -> usize {
        self.kmax + 1
    }

    fn initial(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        y[0] = 1.0;
        y
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        for k in 0..y.len() {
            let prev = if k == 0 { 0.0 } else { y[k - 1] };
            dy[k] = -y[k] + prev;
        }
    }
}

/// Coagulation system for `y_1..=y_kappa`, stored at index `k - 1`.
#[derive(Debug, Clone, Copy)]
pub struct ComponentsOde {
    pub kappa: usize,
}

impl OdeSystem for ComponentsOde {
    fn dim(&self) -> usize {
        self.kappa
    }

    fn initial(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        if !y.is_empty() {
            y[0] = 1.0;
        }
        y
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        for idx in 0..y.len() {
            let k = idx + 1;
            let mut gain = 0.0;
            for j in 1..k {
                gain += (j * (k - j)) as f64 * y[j - 1] * y[k - j - 1];
            }
            dy[idx] = -2.0 * k as f64 * y[idx] + gain;
        }
    }
}

/// Closure-backed system, for ad hoc equations.
pub struct FnOde<F> {
    pub initial: Vec<f64>,
    pub f: F,
}

impl<F: Fn(f64, &[f64], &mut [f64])> OdeSystem for FnOde<F> {
    fn dim(&self) -> usize {
        self.initial.len()
    }

    fn initial(&self) -> Vec<f64> {
        self.initial.clone()
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        (self.f)(t, y, dy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl OdeSolution {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("solution holds the initial state")
    }
}

/// Classical fixed-step RK4 from `t = 0` to `t_end`.
///
/// Samples are taken at `0, h, 2h, ...`; when `t_end` is not a multiple of
/// `h` the final step is shortened to land on `t_end`.
pub fn integrate_rk4<S: OdeSystem + ?Sized>(system: &S, t_end: f64, h: f64) -> Result<OdeSolution> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(param(format!("step size must be positive, got {h}")));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(param(format!("t_end must be non-negative, got {t_end}")));
    }
    let dim = system.dim();
    let mut y = system.initial();
    let full_steps = (t_end / h + 1e-9).floor() as u64;
    let tail = t_end - full_steps as f64 * h;
    let mut times = vec![0.0];
    let mut states = vec![y.clone()];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    );

    let mut step = |t: f64, h: f64, y: &mut Vec<f64>| -> Result<()> {
        system.rhs(t, y, &mut k1);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        system.rhs(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        system.rhs(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + h * k3[i];
        }
        system.rhs(t + h, &tmp, &mut k4);
        for i in 0..dim {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().chain(k1.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Integration(format!("non-finite state near t = {t}")));
        }
        Ok(())
    };

    for i in 0..full_steps {
        let t = i as f64 * h;
        step(t, h, &mut y)?;
        times.push((i + 1) as f64 * h);
        states.push(y.clone());
    }
    if tail > 1e-12 * h.max(1.0) {
        step(full_steps as f64 * h, tail, &mut y)?;
        times.push(t_end);
        states.push(y.clone());
    }
    Ok(OdeSolution { times, states })
}

/// Largest `k` for which the tree-counting identity is checked exactly.
pub const TREE_IDENTITY_MAX_K: u32 = 20;

/// Both sides of `sum_{j=1}^{k-1} C(k,j) j^{j-1} (k-j)^{k-j-1} = 2(k-1) k^{k-2}`.
pub fn verify_tree_identity(k: u32) -> Result<(u128, u128)> {
    if !(1..=TREE_IDENTITY_MAX_K).contains(&k) {
        return Err(param(format!(
            "tree identity supported for 1 <= k <= {TREE_IDENTITY_MAX_K}, got {k}"
        )));
    }
    let k128 = k as u128;
    let mut lhs: u128 = 0;
    let mut binom: u128 = 1; // C(k, j), updated incrementally
    for j in 1..k {
        binom = binom * (k128 - j as u128 + 1) / j as u128;
        let a = (j as u128).pow(j - 1);
        let b = ((k - j) as u128).pow(k - j - 1);
        lhs += binom * a * b;
    }
    let rhs = if k == 1 { 0 } else { 2 * (k128 - 1) * k128.pow(k - 2) };
    Ok((lhs, rhs))
}

/// `|n (f(t + 1/n) - f(t)) - f'(t)|`: the first-order Taylor residual on one step.
pub fn taylor_residual(f: impl Fn(f64) -> f64, f_prime: impl Fn(f64) -> f64, t: f64, n: f64) -> f64 {
    let h = 1.0 / n;
    (n * (f(t + h) - f(t)) - f_prime(t)).abs()
}
