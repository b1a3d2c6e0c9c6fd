//! Simulation and verification of dynamically concentrated random processes.
//!
//! Three discrete processes are simulated with exact integer state:
//! balls thrown into bins ([`balls_bins`]), the random graph process with
//! component counts ([`er_components`]) and random greedy matching on regular
//! graphs ([`greedy_matching`]). Each tracked variable is compared every step
//! with a deterministic trajectory ([`trajectories`]) inside an error envelope
//! ([`envelope`]), and frozen martingale transforms ([`transform`]) record the
//! quantities whose tails are bounded by [`inequalities`].

// `!(x > 0.0)` guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod balls_bins;
pub mod clock;
pub mod envelope;
pub mod er_components;
pub mod error;
pub mod graph;
pub mod greedy_matching;
pub mod inequalities;
pub mod seed;
pub mod series;
pub mod trajectories;
pub mod transform;

pub use clock::SimClock;
pub use envelope::{check_good_event, CriticalIntervalMonitor, Envelope, ErrorFunction, Violation};
pub use error::{Error, Result};
pub use seed::{derive_seed, SeedPlan};
pub use series::{SeriesPoint, TrackedSeries};
pub use trajectories::{ErrorFunctionSpec, Trajectory};
pub use transform::{MartingaleTransform, Sign};
