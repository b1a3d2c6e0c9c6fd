//! Martingale tail bounds and their empirical counterparts.
//!
//! * Azuma–Hoeffding: a supermartingale with `|Y_j - Y_{j-1}| <= C` satisfies
//!   `P(Y_m - Y_0 >= lambda) <= exp(-lambda^2 / (2 C^2 m))`.
//! * Freedman: a supermartingale with `Y_j - Y_{j-1} <= C` and summed
//!   conditional variance `V_m` satisfies
//!   `P(exists m: V_m <= b and Y_m - Y_0 >= lambda) <= exp(-lambda^2 / (2 (b + C lambda)))`.
//!
//! Both bounds are clamped to 1.

use crate::error::{param, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AzumaParams {
    pub c: f64,
    pub m: u64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreedmanParams {
    pub c: f64,
    pub b: f64,
    pub lambda: f64,
}

pub fn azuma_bound(p: AzumaParams) -> Result<f64> {
    if !(p.c > 0.0) || p.m == 0 || !(p.lambda > 0.0) {
        return Err(param(format!(
            "azuma bound needs C > 0, m > 0, lambda > 0 (got C={}, m={}, lambda={})",
            p.c, p.m, p.lambda
        )));
    }
    let exponent = -(p.lambda * p.lambda) / (2.0 * p.c * p.c * p.m as f64);
    Ok(exponent.exp().min(1.0))
}

pub fn freedman_bound(p: FreedmanParams) -> Result<f64> {
    if !(p.c > 0.0) || !(p.b >= 0.0) || !(p.lambda > 0.0) {
        return Err(param(format!(
            "freedman bound needs C > 0, b >= 0, lambda > 0 (got C={}, b={}, lambda={})",
            p.c, p.b, p.lambda
        )));
    }
    if p.b.is_infinite() {
        return Ok(1.0);
    }
    let exponent = -(p.lambda * p.lambda) / (2.0 * (p.b + p.c * p.lambda));
    Ok(exponent.exp().min(1.0))
}

/// Fraction of deviations `>= lambda`.
pub fn empirical_tail(deviations: &[f64], lambda: f64) -> Result<f64> {
    if deviations.is_empty() {
        return Err(param("empirical tail of an empty sample"));
    }
    let hits = deviations.iter().filter(|&&d| d >= lambda).count();
    Ok(hits as f64 / deviations.len() as f64)
}

/// Running sum of one-step conditional variances.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VarianceLedger {
    total: f64,
    entries: Vec<f64>,
}

impl VarianceLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn accumulate(&mut self, step_variance: f64) -> Result<f64> {
        if !(step_variance >= 0.0) {
            return Err(param(format!("step variance must be >= 0, got {step_variance}")));
        }
        self.total += step_variance;
        self.entries.push(step_variance);
        Ok(self.total)
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `V_0, V_1, ...` as partial sums.
    pub fn partial_sums(&self) -> Vec<f64> {
        let mut acc = 0.0;
        std::iter::once(0.0)
            .chain(self.entries.iter().map(|v| {
                acc += v;
                acc
            }))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn azuma_examples() {
        let a = azuma_bound(AzumaParams {
            c: 1.0,
            m: 100,
            lambda: 50.0,
        })
        .unwrap();
        assert!(rel(a, (-12.5f64).exp()) < 1e-14);
        assert!(rel(a, 3.7267e-6) < 1e-4);
        let a = azuma_bound(AzumaParams {
            c: 1.0,
            m: 200,
            lambda: 20.0,
        })
        .unwrap();
        assert!((a - 0.367_879_441).abs() < 1e-9);
        let a = azuma_bound(AzumaParams {
            c: 10.0,
            m: 1,
            lambda: 1e-4,
        })
        .unwrap();
        assert!(a <= 1.0 && a > 1.0 - 1e-9);
    }

    #[test]
    fn azuma_rejects_bad_params() {
        assert!(azuma_bound(AzumaParams {
            c: 0.0,
            m: 1,
            lambda: 1.0
        })
        .is_err());
        assert!(azuma_bound(AzumaParams {
            c: 1.0,
            m: 0,
            lambda: 1.0
        })
        .is_err());
        assert!(azuma_bound(AzumaParams {
            c: 1.0,
            m: 1,
            lambda: -1.0
        })
        .is_err());
    }

    #[test]
    fn freedman_examples() {
        let f = freedman_bound(FreedmanParams {
            c: 1.0,
            b: 10.0,
            lambda: 10.0,
        })
        .unwrap();
        assert!((f - 0.082_084_999).abs() < 1e-8);
        let f = freedman_bound(FreedmanParams {
            c: 2.0,
            b: 0.0,
            lambda: 1.0,
        })
        .unwrap();
        assert!((f - 0.778_800_783).abs() < 1e-8);
        let f = freedman_bound(FreedmanParams {
            c: 1.0,
            b: 1e300,
            lambda: 5.0,
        })
        .unwrap();
        assert!(f > 1.0 - 1e-12);
        assert_eq!(
            freedman_bound(FreedmanParams {
                c: 1.0,
                b: f64::INFINITY,
                lambda: 5.0
            })
            .unwrap(),
            1.0
        );
        assert!(freedman_bound(FreedmanParams {
            c: 1.0,
            b: -1.0,
            lambda: 1.0
        })
        .is_err());
        assert!(freedman_bound(FreedmanParams {
            c: 0.0,
            b: 1.0,
            lambda: 1.0
        })
        .is_err());
        assert!(freedman_bound(FreedmanParams {
            c: 1.0,
            b: 1.0,
            lambda: 0.0
        })
        .is_err());
    }

    #[test]
    fn empirical_tail_examples() {
        assert_eq!(empirical_tail(&[-3.0, -1.0, 2.0, 5.0], 2.0).unwrap(), 0.5);
        assert_eq!(empirical_tail(&[0.0, 0.0, 0.0], 1.0).unwrap(), 0.0);
        assert_eq!(empirical_tail(&[7.0], 7.0).unwrap(), 1.0);
        assert!(empirical_tail(&[], 1.0).is_err());
    }

    #[test]
    fn ledger_examples() {
        let mut v = VarianceLedger::new();
        assert_eq!(v.accumulate(0.5).unwrap(), 0.5);
        assert_eq!(v.accumulate(0.0).unwrap(), 0.5);
        assert!(v.accumulate(-0.1).is_err());

        let mut v = VarianceLedger::new();
        for _ in 0..10 {
            v.accumulate(0.1).unwrap();
        }
        assert!((v.total() - 1.0).abs() < 1e-12);
        let sums = v.partial_sums();
        assert_eq!(sums[0], 0.0);
        assert!(sums.windows(2).all(|w| w[0] <= w[1]));
    }

    proptest! {
        #[test]
        fn azuma_monotone(c in 0.1f64..10.0, m in 1u64..10_000, lambda in 0.1f64..500.0, bump in 1.01f64..3.0) {
            // keep exp() away from underflow; the bound itself is positive
            prop_assume!(lambda * lambda / (2.0 * c * c * m as f64) < 600.0);
            let base = azuma_bound(AzumaParams { c, m, lambda }).unwrap();
            prop_assert!(base > 0.0 && base <= 1.0);
            let more_lambda = azuma_bound(AzumaParams { c, m, lambda: lambda * bump }).unwrap();
            let more_c = azuma_bound(AzumaParams { c: c * bump, m, lambda }).unwrap();
            let more_m = azuma_bound(AzumaParams { c, m: m * 2, lambda }).unwrap();
            prop_assert!(more_lambda <= base);
            prop_assert!(more_c >= base);
            prop_assert!(more_m >= base);
        }

        #[test]
        fn freedman_monotone(c in 0.1f64..10.0, b in 0.0f64..1e4, lambda in 0.1f64..200.0, bump in 1.01f64..3.0) {
            prop_assume!(lambda * lambda / (2.0 * (b + c * lambda)) < 600.0);
            let base = freedman_bound(FreedmanParams { c, b, lambda }).unwrap();
            prop_assert!(base > 0.0 && base <= 1.0);
            let more_lambda = freedman_bound(FreedmanParams { c, b, lambda: lambda * bump }).unwrap();
            let more_b = freedman_bound(FreedmanParams { c, b: b * bump + 1.0, lambda }).unwrap();
            let more_c = freedman_bound(FreedmanParams { c: c * bump, b, lambda }).unwrap();
            prop_assert!(more_lambda <= base);
            prop_assert!(more_b >= base);
            prop_assert!(more_c >= base);
        }
    }
}
