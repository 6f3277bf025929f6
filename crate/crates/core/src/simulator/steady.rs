use std::io::Write;

use rayon::prelude::*;

use super::engine::{SimConfig, Simulation};
use super::{ServiceDistribution, SimError, DEFAULT_DEPTH};
use crate::graph::BipartiteGraph;
use crate::sampling::rng_substream;

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyConfig {
    pub d: usize,
    pub lambda: f64,
    /// Discarded prefix; `None` uses `10 / (1 - lambda)`.
    pub warmup: Option<f64>,
    pub measure: f64,
    pub replicas: usize,
    pub service: ServiceDistribution,
    pub seed: u64,
    /// Levels reported per replica.
    pub depth: usize,
    pub allow_disconnected: bool,
    pub verify_every: Option<u64>,
}

impl SteadyConfig {
    pub fn new(d: usize, lambda: f64, measure: f64, replicas: usize, seed: u64) -> Self {
        SteadyConfig {
            d,
            lambda,
            warmup: None,
            measure,
            replicas,
            service: ServiceDistribution::Exponential,
            seed,
            depth: DEFAULT_DEPTH,
            allow_disconnected: false,
            verify_every: SimConfig::new(d, lambda, 1.0, 0).verify_every,
        }
    }

    pub fn warmup_time(&self) -> f64 {
        self.warmup.unwrap_or(10.0 / (1.0 - self.lambda))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaEstimate {
    pub replica: usize,
    /// Time average of the total number of tasks per server.
    pub mean_qlen: f64,
    /// Time averages `q_1..q_depth`.
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadySummary {
    pub replicas: Vec<ReplicaEstimate>,
    pub mean_qlen: f64,
    /// Standard error across replicas (zero for a single replica).
    pub mean_qlen_stderr: f64,
    pub q: Vec<f64>,
    pub q_stderr: Vec<f64>,
}

fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl SteadySummary {
    fn from_replicas(replicas: Vec<ReplicaEstimate>, depth: usize) -> Self {
        let (mean_qlen, mean_qlen_stderr) = mean_and_stderr(replicas.iter().map(|r| r.mean_qlen));
        let (q, q_stderr) = (0..depth).map(|i| mean_and_stderr(replicas.iter().map(move |r| r.q[i]))).unzip();
        SteadySummary {
            replicas,
            mean_qlen,
            mean_qlen_stderr,
            q,
            q_stderr,
        }
    }

    /// `replica,mean_qlen,q1..qK`, one row per replica.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        write!(out, "replica,mean_qlen")?;
        for i in 1..=self.q.len() {
            write!(out, ",q{i}")?;
        }
        writeln!(out)?;
        for r in &self.replicas {
            write!(out, "{},{}", r.replica, r.mean_qlen)?;
            for v in &r.q {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Replicated time averages on one graph.
pub fn steady_state(graph: &BipartiteGraph, cfg: &SteadyConfig) -> Result<SteadySummary, SimError> {
    steady_state_on(&[graph], cfg)
}

/// Replica `r` runs on `graphs[r % graphs.len()]` with random substream `r`.
pub fn steady_state_on(graphs: &[&BipartiteGraph], cfg: &SteadyConfig) -> Result<SteadySummary, SimError> {
    let warmup = cfg.warmup_time();
    if graphs.is_empty() || cfg.replicas == 0 {
        return Err(SimError::InvalidParameter("need at least one graph and one replica".into()));
    }
    if !(warmup >= 0.0 && cfg.measure > 0.0) {
        return Err(SimError::InvalidParameter(format!(
            "warmup must be nonnegative and measure positive (got {warmup}, {})",
            cfg.measure
        )));
    }
    let end = warmup + cfg.measure;
    let mut sim_cfg = SimConfig::new(cfg.d, cfg.lambda, end, cfg.seed);
    sim_cfg.service = cfg.service;
    sim_cfg.allow_disconnected = cfg.allow_disconnected;
    sim_cfg.verify_every = cfg.verify_every;
    sim_cfg.depth = cfg.depth;

    let mut replicas = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let graph = graphs[r % graphs.len()];
            let mut sim = Simulation::new(graph, &sim_cfg, rng_substream(cfg.seed, r as u64))?;
            sim.run_until(warmup, None)?;
            sim.start_averaging();
            sim.run_until(end, None)?;
            let mut levels = sim.averages().expect("measure window is positive");
            let mean_qlen = levels.iter().sum();
            levels.resize(cfg.depth, 0.0);
            Ok(ReplicaEstimate {
                replica: r,
                mean_qlen,
                q: levels,
            })
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    replicas.sort_by_key(|r| r.replica);
    Ok(SteadySummary::from_replicas(replicas, cfg.depth))
}
