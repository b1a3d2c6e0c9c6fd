//! Frozen super/submartingale transforms.
//!
//! For a tracked variable `X` with trajectory `x` and envelope `eps`, the
//! transforms are
//!
//! ```text
//! X^±(i) = X(i) - scale (x(t_i) ± eps(t_i))   if the good event held through step i-1
//!        = X^±(i-1)                           otherwise
//! ```
//!
//! The good event before step 0 holds trivially. Once the good event fails
//! the transform is frozen and never changes again.

use std::sync::Arc;

use crate::clock::SimClock;
use crate::envelope::Envelope;
use crate::trajectories::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    /// `X - scale (x + eps)`, expected to be a supermartingale.
    Plus,
    /// `X - scale (x - eps)`, expected to be a submartingale.
    Minus,
}

impl Sign {
    #[inline]
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MartingaleTransform {
    sign: Sign,
    trajectory: Arc<dyn Trajectory>,
    envelope: Envelope,
    stride: u64,
    step: u64,
    initial: f64,
    current: f64,
    frozen_at: Option<u64>,
    max_increment: f64,
    history: Vec<(u64, f64)>,
}

impl MartingaleTransform {
    /// Transform started at step 0 with observed value `x0`.
    pub fn start(sign: Sign, trajectory: Arc<dyn Trajectory>, envelope: Envelope, x0: f64, stride: u64) -> Self {
        let reference = trajectory.value(0.0);
        let eps = envelope.epsilon(0.0);
        let initial = x0 - envelope.scale() * (reference + sign.factor() * eps);
        Self {
            sign,
            trajectory,
            envelope,
            stride: stride.max(1),
            step: 0,
            initial,
            current: initial,
            frozen_at: None,
            max_increment: 0.0,
            history: vec![(0, initial)],
        }
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn value(&self) -> f64 {
        self.current
    }

    pub fn frozen_at(&self) -> Option<u64> {
        self.frozen_at
    }

    /// Largest `|X^±(i) - X^±(i-1)|` seen so far.
    pub fn max_increment(&self) -> f64 {
        self.max_increment
    }

    /// Stored `(step, value)` pairs at multiples of the stride.
    pub fn history(&self) -> &[(u64, f64)] {
        &self.history
    }

    /// Advances to the clock's step, evaluating the trajectory and envelope.
    pub fn advance(&mut self, new_value: f64, clock: &SimClock, good_event_held_last_step: bool) -> f64 {
        let t = clock.t();
        let reference = self.trajectory.value(t);
        let eps = self.envelope.epsilon(t);
        self.advance_with(clock.step(), new_value, reference, eps, good_event_held_last_step)
    }

    /// Advances to `step` with precomputed `x(t)` and `eps(t)`.
    #[inline]
    pub fn advance_with(
        &mut self,
        step: u64,
        new_value: f64,
        reference: f64,
        eps: f64,
        good_event_held_last_step: bool,
    ) -> f64 {
        debug_assert_eq!(step, self.step + 1, "transform steps must be consecutive");
        self.step = step;
        if self.frozen_at.is_none() {
            if good_event_held_last_step {
                let next = new_value - self.envelope.scale() * (reference + self.sign.factor() * eps);
                let inc = (next - self.current).abs();
                if inc > self.max_increment {
                    self.max_increment = inc;
                }
                self.current = next;
            } else {
                self.frozen_at = Some(step);
            }
        }
        if step.is_multiple_of(self.stride) {
            self.history.push((step, self.current));
        }
        self.current
    }

    pub fn seal(&mut self) {
        if self.history.last().map(|h| h.0) != Some(self.step) {
            self.history.push((self.step, self.current));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::ConstantError;
    use crate::trajectories::ConstantTrajectory;

    fn setup(sign: Sign, x0: f64) -> MartingaleTransform {
        let env = Envelope::new(
            Arc::new(ConstantError {
                epsilon: 0.1,
                delta: None,
            }),
            100.0,
        );
        MartingaleTransform::start(sign, Arc::new(ConstantTrajectory(1.0)), env, x0, 1)
    }

    #[test]
    fn step_examples() {
        let clock = SimClock::at(100, 1, 10).unwrap();
        let mut plus = setup(Sign::Plus, 100.0);
        assert!((plus.advance(100.0, &clock, true) - (-10.0)).abs() < 1e-12);

        let mut minus = setup(Sign::Minus, 100.0);
        assert!((minus.advance(95.0, &clock, true) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn initial_value_on_trajectory() {
        let t = setup(Sign::Plus, 100.0);
        assert!((t.initial() - (-10.0)).abs() < 1e-12);
        let t = setup(Sign::Minus, 100.0);
        assert!((t.initial() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn frozen_transform_is_constant() {
        let mut t = setup(Sign::Plus, 100.0);
        // value at step 3 is 103 - 110 = -7, good event fails at step 3
        t.advance_with(1, 101.0, 1.0, 0.1, true);
        t.advance_with(2, 102.0, 1.0, 0.1, true);
        t.advance_with(3, 103.0, 1.0, 0.1, true);
        assert!((t.value() - (-7.0)).abs() < 1e-12);
        let frozen = t.value();
        for step in 4..=9 {
            t.advance_with(step, 1.0e6 * step as f64, 1.0, 0.1, false);
            assert_eq!(t.value().to_bits(), frozen.to_bits());
        }
        assert_eq!(t.frozen_at(), Some(4));
        // holding the good event again does not thaw it
        t.advance_with(10, 0.0, 1.0, 0.1, true);
        assert_eq!(t.value().to_bits(), frozen.to_bits());
    }
}
