//! Name-keyed registries of processes, graph generators and verifications.

use std::collections::BTreeMap;

use demlab_core::graph::RegularGraph;
use demlab_core::TrackedSeries;

use crate::config::{ExperimentConfig, Parameters};
use crate::error::{HarnessError, Result};
use crate::report::{ReplicaResult, TailBound};
use crate::verify::{VerifyParams, VerifySummary};

/// What one replica hands back to the ensemble runner.
#[derive(Debug, Clone)]
pub struct ReplicaTrace {
    pub result: ReplicaResult,
    pub series: Vec<TrackedSeries>,
}

/// A process family that can be configured and run.
pub trait Process: Send + Sync {
    fn name(&self) -> &'static str;
    /// Validates the configuration and builds shared read-only inputs.
    fn prepare<'a>(&self, cfg: &ExperimentConfig, registry: &'a Registry) -> Result<Box<dyn PreparedProcess + 'a>>;
}

/// A validated process ready to run replicas.
pub trait PreparedProcess: Send + Sync {
    fn parameters(&self) -> Parameters;
    /// Divisor turning steps into `t`.
    fn time_scale(&self) -> f64;
    /// Variables whose final values are aggregated.
    fn tracked(&self) -> Vec<String>;
    /// Predicted final value of each tracked variable, on the count scale.
    fn predicted(&self) -> Vec<Option<f64>>;
    fn run_replica(&self, replica: u64, seed: u64) -> demlab_core::Result<ReplicaTrace>;
    fn tail_bounds(&self, results: &[ReplicaResult]) -> Vec<TailBound>;
}

pub trait GraphGenerator: Send + Sync {
    fn name(&self) -> &'static str;
    /// True when the output ignores the seed.
    fn deterministic(&self) -> bool;
    fn generate(&self, n: u32, d: u32, seed: u64) -> demlab_core::Result<RegularGraph>;
}

pub trait Verification: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, params: &VerifyParams) -> Result<VerifySummary>;
}

#[derive(Default)]
pub struct Registry {
    processes: BTreeMap<&'static str, Box<dyn Process>>,
    generators: BTreeMap<&'static str, Box<dyn GraphGenerator>>,
    verifications: BTreeMap<&'static str, Box<dyn Verification>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// All built-in strategies.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register_process(Box::new(crate::processes::BallsBinsProcess));
        r.register_process(Box::new(crate::processes::ComponentsProcess));
        r.register_process(Box::new(crate::processes::MatchingProcess));
        r.register_generator(Box::new(crate::processes::Circulant));
        r.register_generator(Box::new(crate::processes::Pairing));
        r.register_verification(Box::new(crate::verify::Identities));
        r.register_verification(Box::new(crate::verify::OdeCheck));
        r.register_verification(Box::new(crate::verify::DriftOracles));
        r
    }

    pub fn register_process(&mut self, p: Box<dyn Process>) {
        self.processes.insert(p.name(), p);
    }

    pub fn register_generator(&mut self, g: Box<dyn GraphGenerator>) {
        self.generators.insert(g.name(), g);
    }

    pub fn register_verification(&mut self, v: Box<dyn Verification>) {
        self.verifications.insert(v.name(), v);
    }

    pub fn process(&self, name: &str) -> Result<&dyn Process> {
        self.processes
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| unknown("process", name, self.processes.keys()))
    }

    pub fn generator(&self, name: &str) -> Result<&dyn GraphGenerator> {
        self.generators
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| unknown("graph generator", name, self.generators.keys()))
    }

    pub fn verification(&self, name: &str) -> Result<&dyn Verification> {
        self.verifications
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| unknown("verification kind", name, self.verifications.keys()))
    }

    pub fn process_names(&self) -> Vec<&'static str> {
        self.processes.keys().copied().collect()
    }

    pub fn generator_names(&self) -> Vec<&'static str> {
        self.generators.keys().copied().collect()
    }

    pub fn verification_names(&self) -> Vec<&'static str> {
        self.verifications.keys().copied().collect()
    }
}

fn unknown<'a>(what: &str, name: &str, known: impl Iterator<Item = &'a &'static str>) -> HarnessError {
    let list: Vec<&str> = known.copied().collect();
    HarnessError::config(format!("unknown {what} {name:?} (known: {})", list.join(", ")))
}
