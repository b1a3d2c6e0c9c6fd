//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::ensemble::{run_and_emit, EnsembleOutcome};
use crate::error::{HarnessError, Result};
use crate::registry::Registry;
use crate::verify::{VerifyParams, VerifySummary};

#[derive(Debug, Parser)]
#[command(
    name = "demlab",
    version,
    about = "Dynamic concentration experiments for random processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Balls thrown uniformly into n bins; tracks bins with exactly k balls.
    BallsBins(BallsArgs),
    /// Random graph process; tracks components of order k.
    ErComponents(ComponentsArgs),
    /// Random greedy matching on a d-regular graph; tracks vertex degrees.
    Matching(MatchingArgs),
    /// Deterministic checks: identities, ode or drift-oracles.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Flat key=value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    base_seed: Option<u64>,
    /// Index of the first replica.
    #[arg(long)]
    replica_offset: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record every r-th step.
    #[arg(long)]
    stride: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    plot_var: Option<String>,
    #[arg(long)]
    max_violation_rate: Option<f64>,
    /// Include wall-clock time in report.json.
    #[arg(long)]
    record_timing: bool,
}

#[derive(Debug, Args)]
struct BallsArgs {
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    kappa: Option<usize>,
    /// basic or selfcorrect.
    #[arg(long)]
    envelope: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ComponentsArgs {
    #[arg(long)]
    n: Option<u64>,
    /// Edges added: floor(c n).
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    kappa: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct MatchingArgs {
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    d: Option<u32>,
    /// circulant or pairing.
    #[arg(long)]
    gen: Option<String>,
    #[arg(long = "K")]
    k_const: Option<f64>,
    /// Edge list: header "n d" then one "u v" per line.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Vertices given individual degree transforms.
    #[arg(long)]
    sample: Option<usize>,
    /// Check the drift bound for every vertex at every window step.
    #[arg(long)]
    drift_audit: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// identities, ode or drift-oracles.
    kind: String,
    #[arg(long)]
    kmax: Option<u32>,
    /// balls, components or both.
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    kappa: Option<usize>,
    #[arg(long = "t")]
    t_end: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// balls, er, matching or all.
    #[arg(long)]
    process: Option<String>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    states: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the summary as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Pairs(Vec<(&'static str, String)>);

impl Pairs {
    fn opt<T: ToString>(&mut self, key: &'static str, v: &Option<T>) {
        if let Some(v) = v {
            self.0.push((key, v.to_string()));
        }
    }

    fn path(&mut self, key: &'static str, v: &Option<PathBuf>) {
        if let Some(v) = v {
            self.0.push((key, v.display().to_string()));
        }
    }

    fn flag(&mut self, key: &'static str, v: bool) {
        if v {
            self.0.push((key, "true".into()));
        }
    }

    fn common(&mut self, c: &Common) {
        self.opt("seeds", &c.seeds);
        self.opt("base_seed", &c.base_seed);
        self.opt("replica_offset", &c.replica_offset);
        self.path("out", &c.out);
        self.opt("stride", &c.stride);
        self.opt("workers", &c.workers);
        self.opt("plot_var", &c.plot_var);
        self.opt("max_violation_rate", &c.max_violation_rate);
        self.flag("record_timing", c.record_timing);
    }
}

fn build_config(process: &str, file: &Option<PathBuf>, pairs: Pairs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(process);
    if let Some(path) = file {
        cfg.apply_file(path)?;
    }
    for (k, v) in &pairs.0 {
        cfg.apply(k, v)?;
    }
    Ok(cfg)
}

fn experiment_config(command: &Command) -> Result<ExperimentConfig> {
    let mut p = Pairs(Vec::new());
    match command {
        Command::BallsBins(a) => {
            p.opt("n", &a.n);
            p.opt("m", &a.m);
            p.opt("kappa", &a.kappa);
            p.opt("envelope", &a.envelope);
            p.opt("alpha", &a.alpha);
            p.common(&a.common);
            build_config("balls-bins", &a.common.config, p)
        }
        Command::ErComponents(a) => {
            p.opt("n", &a.n);
            p.opt("c", &a.c);
            p.opt("kappa", &a.kappa);
            p.common(&a.common);
            build_config("er-components", &a.common.config, p)
        }
        Command::Matching(a) => {
            p.opt("n", &a.n);
            p.opt("d", &a.d);
            p.opt("gen", &a.gen);
            p.opt("K", &a.k_const);
            p.path("graph", &a.graph);
            p.opt("sample", &a.sample);
            p.flag("drift_audit", a.drift_audit);
            p.common(&a.common);
            build_config("matching", &a.common.config, p)
        }
        Command::Verify(_) => unreachable!("verify has no experiment config"),
    }
}

fn verify_params(a: &VerifyArgs) -> VerifyParams {
    let d = VerifyParams::default();
    VerifyParams {
        kmax: a.kmax.unwrap_or(d.kmax),
        system: a.system.clone().unwrap_or(d.system),
        kappa: a.kappa.unwrap_or(d.kappa),
        t_end: a.t_end.unwrap_or(d.t_end),
        h: a.h.unwrap_or(d.h),
        tol: a.tol.unwrap_or(d.tol),
        process: a.process.clone().unwrap_or(d.process),
        n: a.n,
        d: a.d.unwrap_or(d.d),
        states: a.states.unwrap_or(d.states),
        seed: a.seed.unwrap_or(d.seed),
    }
}

fn print_outcome(outcome: &EnsembleOutcome) {
    let r = &outcome.report;
    let a = &r.aggregate;
    println!(
        "{}: {} replicas ({} failed), violation frequency {}",
        r.process, r.replicas, a.failed, a.violation_frequency
    );
    for (i, var) in a.tracked.iter().enumerate() {
        let pred = a.predicted_final[i].map_or_else(|| "-".to_string(), |p| format!("{p:.6}"));
        println!(
            "  {var}: mean {:.6} sd {:.6} predicted {pred}",
            a.mean_final[i], a.stddev_final[i]
        );
    }
    if let Some(u) = a.mean_unmatched_fraction {
        println!("  mean unmatched fraction {u:.6}");
    }
    for t in &a.tail_bounds {
        println!(
            "  {} {}: bound {:.6} empirical tail {} positive {}",
            t.var,
            t.inequality,
            t.bound,
            t.empirical_tail.map_or("-".into(), |x| x.to_string()),
            t.positive_frequency.map_or("-".into(), |x| x.to_string())
        );
    }
}

fn print_summary(s: &VerifySummary) {
    for c in &s.cases {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        println!(
            "{mark} {} (measured {:e}, tolerance {:e})",
            c.name, c.measured, c.tolerance
        );
    }
    println!("{}: {}/{} pass", s.kind, s.passed_count(), s.cases.len());
}

fn dispatch(command: Command, registry: &Registry) -> Result<i32> {
    if let Command::Verify(a) = &command {
        let summary = registry.verification(&a.kind)?.run(&verify_params(a))?;
        print_summary(&summary);
        if let Some(path) = &a.out {
            let mut text = serde_json::to_string_pretty(&summary)?;
            text.push('\n');
            std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))?;
        }
        return Ok(if summary.passed { 0 } else { 1 });
    }
    let cfg = experiment_config(&command)?;
    let (outcome, code) = run_and_emit(&cfg, registry)?;
    print_outcome(&outcome);
    if cfg.record_timing {
        eprintln!("wall clock {:.3} s", outcome.wall_clock_seconds);
    }
    if code != 0 {
        eprintln!(
            "violation frequency {} exceeds {}",
            outcome.violation_frequency(),
            cfg.max_violation_rate
        );
    }
    Ok(code)
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command, &Registry::builtin()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
