use flexsim_core::meanfield::fixed_point;
use flexsim_core::simulator::{
    coupled_simulate, simulate as run_simulation, steady_state_on, CoupledConfig, ServiceDistribution, SimConfig,
    SteadyConfig, DEFAULT_DEPTH, DEFAULT_SAMPLE_INTERVAL,
};

use super::{load_graph, service, verify_every, DEFAULT_D, DEFAULT_HORIZON, DEFAULT_LAMBDA, DEFAULT_SEED};
use crate::args::{CoupledArgs, SimulateArgs, SteadyArgs};
use crate::config::{emit, resolve, Metadata};
use crate::error::{CliError, Result};

const DEFAULT_MEASURE: f64 = 200.0;
const DEFAULT_REPLICAS: usize = 8;

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let a = resolve(args.clone(), args.config.as_deref())?;
    let seed = a.seed.unwrap_or(DEFAULT_SEED);
    let mut cfg = SimConfig::new(
        a.d.unwrap_or(DEFAULT_D),
        a.lambda.unwrap_or(DEFAULT_LAMBDA),
        a.horizon.unwrap_or(DEFAULT_HORIZON),
        seed,
    );
    cfg.service = service(a.service.as_deref())?;
    cfg.sample_interval = a.sample_interval.unwrap_or(DEFAULT_SAMPLE_INTERVAL);
    cfg.depth = a.depth.unwrap_or(DEFAULT_DEPTH);
    cfg.initial = a.initial.clone();
    cfg.allow_disconnected = a.allow_disconnected.unwrap_or(false);
    cfg.verify_every = verify_every(a.verify_every, cfg.verify_every);

    let mut meta = Metadata::new("simulate");
    push_common(&mut meta, seed, cfg.lambda, cfg.d, cfg.depth, cfg.service);
    let graph = load_graph(&a.graph, a.graph.graph_seed.unwrap_or(seed), &mut meta)?;
    meta.config(&a);
    let rec = run_simulation(&graph, &cfg)?;
    meta.push("events", rec.event_count)
        .push("arrivals", rec.arrival_count)
        .push("departures", rec.departure_count);
    let mut body = Vec::new();
    rec.write_csv(&mut body)?;
    emit(a.out.as_deref(), &meta, &body)
}

pub fn steady(args: SteadyArgs) -> Result<()> {
    let a = resolve(args.clone(), args.config.as_deref())?;
    let seed = a.seed.unwrap_or(DEFAULT_SEED);
    let mut cfg = SteadyConfig::new(
        a.d.unwrap_or(DEFAULT_D),
        a.lambda.unwrap_or(DEFAULT_LAMBDA),
        a.measure.unwrap_or(DEFAULT_MEASURE),
        a.replicas.unwrap_or(DEFAULT_REPLICAS),
        seed,
    );
    cfg.warmup = a.warmup;
    cfg.service = service(a.service.as_deref())?;
    cfg.depth = a.depth.unwrap_or(DEFAULT_DEPTH);
    cfg.allow_disconnected = a.allow_disconnected.unwrap_or(false);
    let instances = a.graphs.unwrap_or(1);
    if instances == 0 {
        return Err(CliError::usage("--graphs must be at least 1"));
    }
    if instances > 1 && a.graph.graph.is_some() {
        return Err(CliError::usage("--graphs > 1 needs generator flags, not --graph"));
    }

    let mut meta = Metadata::new("steady");
    push_common(&mut meta, seed, cfg.lambda, cfg.d, cfg.depth, cfg.service);
    meta.push("warmup", cfg.warmup_time()).push("graph_instances", instances);
    let base = a.graph.graph_seed.unwrap_or(seed);
    let mut graphs = Vec::with_capacity(instances);
    for i in 0..instances {
        // Only the first instance is described in the header.
        let mut scratch = Metadata::new("steady");
        let target = if i == 0 { &mut meta } else { &mut scratch };
        graphs.push(load_graph(&a.graph, base.wrapping_add(i as u64), target)?);
    }
    meta.config(&a);
    let refs: Vec<_> = graphs.iter().collect();
    let summary = steady_state_on(&refs, &cfg)?;
    meta.push("mean_qlen", summary.mean_qlen)
        .push("mean_qlen_stderr", summary.mean_qlen_stderr);
    if cfg.service == ServiceDistribution::Exponential {
        let q = fixed_point(cfg.lambda, cfg.d as u32, cfg.depth.max(64))?;
        meta.push("fixed_point_mean_qlen", q.mean_queue_length());
    }
    let mut body = Vec::new();
    summary.write_csv(&mut body)?;
    emit(a.out.as_deref(), &meta, &body)
}

pub fn coupled(args: CoupledArgs) -> Result<()> {
    let a = resolve(args.clone(), args.config.as_deref())?;
    let seed = a.seed.unwrap_or(DEFAULT_SEED);
    let mut cfg = CoupledConfig::new(
        a.d.unwrap_or(DEFAULT_D),
        a.lambda.unwrap_or(DEFAULT_LAMBDA),
        a.horizon.unwrap_or(DEFAULT_HORIZON),
        seed,
    );
    cfg.depth = a.depth.unwrap_or(DEFAULT_DEPTH);
    cfg.sample_interval = a.sample_interval.unwrap_or(DEFAULT_SAMPLE_INTERVAL);
    cfg.max_events = a.max_events;
    cfg.allow_disconnected = a.allow_disconnected.unwrap_or(false);
    cfg.verify_every = verify_every(a.verify_every, cfg.verify_every);

    let mut meta = Metadata::new("coupled");
    push_common(&mut meta, seed, cfg.lambda, cfg.d, cfg.depth, ServiceDistribution::Exponential);
    let graph = load_graph(&a.graph, a.graph.graph_seed.unwrap_or(seed), &mut meta)?;
    meta.config(&a);
    let out = coupled_simulate(&graph, &cfg)?;
    meta.push("events", out.events)
        .push("end_time", out.end_time)
        .push("delta", out.delta)
        .push("mismatch_fraction", out.mismatch_fraction())
        .push("min_margin", out.min_margin);
    let mut body = Vec::new();
    out.write_csv(&mut body)?;
    emit(a.out.as_deref(), &meta, &body)
}

fn push_common(meta: &mut Metadata, seed: u64, lambda: f64, d: usize, depth: usize, svc: ServiceDistribution) {
    meta.push("seed", seed)
        .push("lambda", lambda)
        .push("d", d)
        .push("depth", depth)
        .push("service", svc.name());
}
