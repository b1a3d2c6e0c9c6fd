//! Envelopes, the good event and critical-interval monitoring.

use std::fmt::Debug;
use std::sync::Arc;

use crate::clock::SimClock;
use crate::error::{Error, Result};
use crate::series::TrackedSeries;
use crate::trajectories::Trajectory;

/// An error function `eps(t) >= 0`, optionally with an inner `0 < delta(t) <= eps(t)`.
pub trait ErrorFunction: Send + Sync + Debug {
    fn epsilon(&self, t: f64) -> f64;

    fn delta(&self, _t: f64) -> Option<f64> {
        None
    }
}

/// Fixed `eps` and optional `delta`; used for fixtures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantError {
    pub epsilon: f64,
    pub delta: Option<f64>,
}

impl ErrorFunction for ConstantError {
    fn epsilon(&self, _t: f64) -> f64 {
        self.epsilon
    }

    fn delta(&self, _t: f64) -> Option<f64> {
        self.delta
    }
}

/// Band `scale * (x(t) -/+ eps(t))` around a trajectory.
#[derive(Debug, Clone)]
pub struct Envelope {
    error: Arc<dyn ErrorFunction>,
    scale: f64,
}

impl Envelope {
    pub fn new(error: Arc<dyn ErrorFunction>, scale: f64) -> Self {
        Self { error, scale }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn epsilon(&self, t: f64) -> f64 {
        self.error.epsilon(t)
    }

    pub fn delta(&self, t: f64) -> Option<f64> {
        self.error.delta(t)
    }

    pub fn has_delta(&self) -> bool {
        self.error.delta(0.0).is_some()
    }

    /// `(scale (x - eps), scale (x + eps))`.
    pub fn bounds(&self, trajectory_value: f64, t: f64) -> (f64, f64) {
        band(self.scale, trajectory_value, self.error.epsilon(t))
    }

    /// Critical interval `[scale (x + delta), scale (x + eps)]`, if `delta` exists.
    pub fn critical_interval(&self, trajectory_value: f64, t: f64) -> Option<(f64, f64)> {
        let delta = self.error.delta(t)?;
        let eps = self.error.epsilon(t);
        Some((
            self.scale * (trajectory_value + delta),
            self.scale * (trajectory_value + eps),
        ))
    }

    /// Checks `0 < delta(t) <= eps(t)` on `points` evenly spaced times in `[0, t_end]`.
    pub fn delta_within_epsilon(&self, t_end: f64, points: usize) -> bool {
        let points = points.max(2);
        (0..points).all(|i| {
            let t = t_end * i as f64 / (points - 1) as f64;
            match self.error.delta(t) {
                Some(d) => d > 0.0 && d <= self.error.epsilon(t),
                None => true,
            }
        })
    }
}

#[inline]
pub fn band(scale: f64, trajectory_value: f64, eps: f64) -> (f64, f64) {
    (scale * (trajectory_value - eps), scale * (trajectory_value + eps))
}

/// Signed distance outside `[lo, hi]`: positive above, negative below, `None` inside.
#[inline]
pub fn exceedance(value: f64, lo: f64, hi: f64) -> Option<f64> {
    if value > hi {
        Some(value - hi)
    } else if value < lo {
        Some(value - lo)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Index of the offending series in the checked set.
    pub index: usize,
    pub id: String,
    pub step: u64,
    /// `value - hi` when above the band, `value - lo` when below.
    pub exceedance: f64,
}

/// Checks the current value of every series against its envelope band.
///
/// Returns the first series (in list order) that lies outside
/// `[scale (x - eps), scale (x + eps)]` at the clock's time.
pub fn check_good_event(
    series: &[TrackedSeries],
    trajectories: &[&dyn Trajectory],
    envelope: &Envelope,
    clock: &SimClock,
) -> Result<Option<Violation>> {
    if series.len() != trajectories.len() {
        return Err(Error::Config(format!(
            "{} series but {} trajectories",
            series.len(),
            trajectories.len()
        )));
    }
    let t = clock.t();
    for (index, (s, traj)) in series.iter().zip(trajectories).enumerate() {
        let Some(value) = s.last_value() else {
            continue;
        };
        let (lo, hi) = envelope.bounds(traj.value(t), t);
        if let Some(exceedance) = exceedance(value, lo, hi) {
            return Ok(Some(Violation {
                index,
                id: s.id().to_string(),
                step: clock.step(),
                exceedance,
            }));
        }
    }
    Ok(None)
}

/// Tracks entries into the critical interval `I(t)`.
///
/// The entry step `j` is set when the value moves from strictly below the
/// `delta` boundary into `I(t)`, kept while the value stays inside and
/// cleared when it drops back below. Leaving through the top keeps `j`, which
/// then names the episode that ended in an envelope violation.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalIntervalMonitor {
    entry: Option<u64>,
    inside: bool,
    below: bool,
}

/// What a monitor update observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalTransition {
    Entered(u64),
    Stayed,
    ExitedBelow,
    ExitedAbove,
    Outside,
}

impl Default for CriticalIntervalMonitor {
    fn default() -> Self {
        Self::new()
    }
}

impl CriticalIntervalMonitor {
    pub fn new() -> Self {
        Self {
            entry: None,
            inside: false,
            below: false,
        }
    }

    pub fn entry_step(&self) -> Option<u64> {
        self.entry
    }

    pub fn inside(&self) -> bool {
        self.inside
    }

    /// Update with the value at `step`, given the interval `[lo, hi]` at that step.
    pub fn update_with(&mut self, value: f64, step: u64, lo: f64, hi: f64) -> CriticalTransition {
        let transition = if value < lo {
            let was_inside = self.inside;
            self.entry = None;
            self.inside = false;
            if was_inside {
                CriticalTransition::ExitedBelow
            } else {
                CriticalTransition::Outside
            }
        } else if value <= hi {
            if self.inside {
                CriticalTransition::Stayed
            } else if self.below {
                self.entry = Some(step);
                self.inside = true;
                CriticalTransition::Entered(step)
            } else {
                CriticalTransition::Outside
            }
        } else {
            let was_inside = self.inside;
            self.inside = false;
            if was_inside {
                CriticalTransition::ExitedAbove
            } else {
                CriticalTransition::Outside
            }
        };
        self.below = value < lo;
        transition
    }

    pub fn update(
        &mut self,
        value: f64,
        trajectory: &dyn Trajectory,
        envelope: &Envelope,
        clock: &SimClock,
    ) -> Result<CriticalTransition> {
        let t = clock.t();
        let (lo, hi) = envelope
            .critical_interval(trajectory.value(t), t)
            .ok_or_else(|| Error::Config("critical interval needs an envelope with delta".into()))?;
        Ok(self.update_with(value, clock.step(), lo, hi))
    }
}
