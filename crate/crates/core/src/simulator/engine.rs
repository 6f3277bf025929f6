use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::state::SystemState;
use super::{check_common, ServiceDistribution, SimError, DEBUG_VERIFY_EVERY, DEFAULT_DEPTH, DEFAULT_SAMPLE_INTERVAL};
use crate::graph::BipartiteGraph;
use crate::sampling::{floyd_sample, rng_from_seed, SimRng};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub d: usize,
    pub lambda: f64,
    pub horizon: f64,
    pub service: ServiceDistribution,
    pub sample_interval: f64,
    /// Levels recorded per sample; longer queues go to the overflow column.
    pub depth: usize,
    pub seed: u64,
    /// Initial queue lengths; `None` starts empty.
    pub initial: Option<Vec<u32>>,
    pub allow_disconnected: bool,
    /// Accept `lambda >= 1` (the system is then transient).
    pub allow_unstable: bool,
    /// Recount the state every this many events.
    pub verify_every: Option<u64>,
}

impl SimConfig {
    pub fn new(d: usize, lambda: f64, horizon: f64, seed: u64) -> Self {
        SimConfig {
            d,
            lambda,
            horizon,
            service: ServiceDistribution::Exponential,
            sample_interval: DEFAULT_SAMPLE_INTERVAL,
            depth: DEFAULT_DEPTH,
            seed,
            initial: None,
            allow_disconnected: false,
            allow_unstable: false,
            verify_every: cfg!(debug_assertions).then_some(DEBUG_VERIFY_EVERY),
        }
    }

    fn validate(&self, graph: &BipartiteGraph) -> Result<(), SimError> {
        check_common(graph, self.lambda, self.d, self.allow_disconnected, self.allow_unstable)?;
        self.service.validate()?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(SimError::InvalidParameter(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.sample_interval > 0.0) || self.depth == 0 {
            return Err(SimError::InvalidParameter("sample interval and depth must be positive".into()));
        }
        if let Some(init) = &self.initial {
            if init.len() != graph.n_servers() {
                return Err(SimError::InvalidParameter(format!(
                    "initial state has {} queues for {} servers",
                    init.len(),
                    graph.n_servers()
                )));
            }
        }
        Ok(())
    }
}

/// Occupancy samples on a regular time grid plus event tallies.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub depth: usize,
    pub sample_times: Vec<f64>,
    /// `occupancy[k][i-1]` is `q_i` at `sample_times[k]`.
    pub occupancy: Vec<Vec<f64>>,
    /// Fraction of servers longer than `depth` at each sample.
    pub overflow: Vec<f64>,
    pub event_count: u64,
    pub arrival_count: u64,
    pub departure_count: u64,
    pub initial_tasks: u64,
    pub final_tasks: u64,
}

impl TrajectoryRecord {
    pub fn new(depth: usize) -> Self {
        TrajectoryRecord {
            depth,
            sample_times: Vec::new(),
            occupancy: Vec::new(),
            overflow: Vec::new(),
            event_count: 0,
            arrival_count: 0,
            departure_count: 0,
            initial_tasks: 0,
            final_tasks: 0,
        }
    }

    /// Average of each `q_i` over the samples.
    pub fn sample_mean(&self) -> Vec<f64> {
        let k = self.occupancy.len().max(1) as f64;
        (0..self.depth)
            .map(|i| self.occupancy.iter().map(|q| q[i]).sum::<f64>() / k)
            .collect()
    }

    pub fn csv_header(depth: usize) -> String {
        let mut h = String::from("t");
        for i in 1..=depth {
            h.push_str(&format!(",q{i}"));
        }
        h.push_str(",overflow");
        h
    }

    /// `t,q1..qK,overflow`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{}", Self::csv_header(self.depth))?;
        for k in 0..self.sample_times.len() {
            write!(out, "{}", self.sample_times[k])?;
            for v in &self.occupancy[k] {
                write!(out, ",{v}")?;
            }
            writeln!(out, ",{}", self.overflow[k])?;
        }
        Ok(())
    }
}

/// Regular sampling grid `0, dt, 2 dt, ...` up to a horizon.
pub struct Sampler {
    interval: f64,
    horizon: f64,
    next_index: u64,
}

impl Sampler {
    pub fn new(interval: f64, horizon: f64) -> Self {
        Sampler {
            interval,
            horizon,
            next_index: 0,
        }
    }

    /// Next grid time not yet recorded, if within the horizon.
    pub(crate) fn due(&self, t: f64) -> Option<f64> {
        let s = self.next_index as f64 * self.interval;
        (s <= t && s <= self.horizon * (1.0 + 1e-12)).then_some(s)
    }

    pub(crate) fn advance(&mut self) {
        self.next_index += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Completion {
    time: f64,
    server: u32,
}

impl Eq for Completion {}

impl Ord for Completion {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.server.cmp(&other.server))
    }
}

impl PartialOrd for Completion {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

enum Clock {
    /// Exponential service: one aggregate clock of rate `lambda N + busy`.
    Markov { next: Option<f64> },
    /// FCFS completion events for the head-of-line task of each busy server.
    General {
        next_arrival: f64,
        completions: BinaryHeap<Reverse<Completion>>,
    },
}

/// Integrals of `Q_i` over time, updated lazily per level.
struct Averager {
    start: f64,
    acc: Vec<f64>,
    last: Vec<f64>,
}

impl Averager {
    fn touch(&mut self, level: usize, count: u64, t: f64) {
        if level >= self.acc.len() {
            self.acc.resize(level + 1, 0.0);
            self.last.resize(level + 1, self.start);
        }
        self.acc[level] += count as f64 * (t - self.last[level]);
        self.last[level] = t;
    }
}

/// What the last arrival saw, recorded when tracing is on.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArrivalTrace {
    pub dispatcher: usize,
    /// Sampled servers with their queue lengths before the arrival.
    pub sampled: Vec<(usize, u32)>,
    pub chosen: usize,
}

/// A running simulation that can be advanced in pieces.
pub struct Simulation<'g> {
    graph: &'g BipartiteGraph,
    cfg: SimConfig,
    state: SystemState,
    rng: SimRng,
    clock_time: f64,
    clock: Clock,
    averager: Option<Averager>,
    scratch: Vec<usize>,
    trace: Option<ArrivalTrace>,
    events: u64,
    arrivals: u64,
    departures: u64,
}

impl<'g> Simulation<'g> {
    pub fn new(graph: &'g BipartiteGraph, cfg: &SimConfig, mut rng: SimRng) -> Result<Self, SimError> {
        cfg.validate(graph)?;
        let state = match &cfg.initial {
            Some(init) => SystemState::from_lengths(init),
            None => SystemState::empty(graph.n_servers()),
        };
        let clock = match cfg.service {
            ServiceDistribution::Exponential => Clock::Markov { next: None },
            service => {
                let rate = cfg.lambda * graph.n_servers() as f64;
                let first: f64 = Exp1.sample(&mut rng);
                let mut completions = BinaryHeap::new();
                for v in 0..state.n_servers() {
                    if state.length(v) > 0 {
                        let time = service.sample(&mut rng);
                        completions.push(Reverse(Completion { time, server: v as u32 }));
                    }
                }
                Clock::General {
                    next_arrival: first / rate,
                    completions,
                }
            }
        };
        Ok(Simulation {
            graph,
            cfg: cfg.clone(),
            state,
            rng,
            clock_time: 0.0,
            clock,
            averager: None,
            scratch: Vec::with_capacity(cfg.d),
            trace: None,
            events: 0,
            arrivals: 0,
            departures: 0,
        })
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.clock_time
    }

    pub fn event_count(&self) -> u64 {
        self.events
    }

    /// Records the sample and choice of every arrival from now on.
    pub fn enable_trace(&mut self) {
        self.trace = Some(ArrivalTrace::default());
    }

    /// The most recent arrival, if tracing is on and one has happened.
    pub fn last_arrival(&self) -> Option<&ArrivalTrace> {
        self.trace.as_ref().filter(|t| !t.sampled.is_empty())
    }

    /// Processes exactly one event and returns its time.
    pub fn step(&mut self) -> Result<f64, SimError> {
        let te = self.next_event_time();
        self.clock_time = te;
        self.fire();
        self.events += 1;
        if let Some(every) = self.cfg.verify_every {
            if self.events.is_multiple_of(every) {
                self.verify()?;
            }
        }
        Ok(te)
    }

    /// Starts time-averaging the occupancy from the current time.
    pub fn start_averaging(&mut self) {
        self.averager = Some(Averager {
            start: self.clock_time,
            acc: Vec::new(),
            last: Vec::new(),
        });
    }

    /// Time averages `q_1, q_2, ...` since [`Simulation::start_averaging`],
    /// over every level that was ever occupied.
    pub fn averages(&self) -> Option<Vec<f64>> {
        let avg = self.averager.as_ref()?;
        let t = self.clock_time;
        let span = t - avg.start;
        if span <= 0.0 {
            return None;
        }
        let levels = avg.acc.len().max(self.state.counts().len());
        let n = self.state.n_servers() as f64;
        Some(
            (1..levels)
                .map(|i| {
                    let acc = avg.acc.get(i).copied().unwrap_or(0.0);
                    let last = avg.last.get(i).copied().unwrap_or(avg.start);
                    (acc + self.state.count(i) as f64 * (t - last)) / (n * span)
                })
                .collect(),
        )
    }

    fn next_event_time(&mut self) -> f64 {
        match &mut self.clock {
            Clock::Markov { next } => *next.get_or_insert_with(|| {
                let rate = self.cfg.lambda * self.state.n_servers() as f64 + self.state.busy_count() as f64;
                let e: f64 = Exp1.sample(&mut self.rng);
                self.clock_time + e / rate
            }),
            Clock::General {
                next_arrival,
                completions,
            } => match completions.peek() {
                Some(Reverse(c)) if c.time < *next_arrival => c.time,
                _ => *next_arrival,
            },
        }
    }

    /// Processes every event up to `t_end` and leaves the clock there.
    /// Samples due before each event are handed to `sink`.
    pub fn run_until(
        &mut self,
        t_end: f64,
        mut sink: Option<(&mut Sampler, &mut TrajectoryRecord)>,
    ) -> Result<(), SimError> {
        loop {
            let te = self.next_event_time();
            let stop = te > t_end;
            let limit = if stop { t_end } else { te };
            if let Some((sampler, rec)) = sink.as_mut() {
                while let Some(s) = sampler.due(limit) {
                    let (q, over) = self.state.occupancy(rec.depth);
                    rec.sample_times.push(s);
                    rec.occupancy.push(q);
                    rec.overflow.push(over);
                    sampler.advance();
                }
            }
            if stop {
                self.clock_time = t_end;
                return Ok(());
            }
            self.step()?;
        }
    }

    pub fn verify(&self) -> Result<(), SimError> {
        let fail = |detail| SimError::Invariant {
            event: self.events,
            detail,
        };
        self.state.verify().map_err(fail)?;
        if let Clock::General { completions, .. } = &self.clock {
            if completions.len() != self.state.busy_count() {
                return Err(fail(format!(
                    "{} pending completions for {} busy servers",
                    completions.len(),
                    self.state.busy_count()
                )));
            }
        }
        Ok(())
    }

    fn fire(&mut self) {
        let t = self.clock_time;
        let n = self.state.n_servers() as f64;
        match &mut self.clock {
            Clock::Markov { next } => {
                *next = None;
                let arrival_rate = self.cfg.lambda * n;
                let rate = arrival_rate + self.state.busy_count() as f64;
                if self.rng.gen::<f64>() * rate < arrival_rate || self.state.busy_count() == 0 {
                    let v = self.route();
                    self.arrive(v);
                } else {
                    let v = self.state.busy_server(self.rng.gen_range(0..self.state.busy_count()));
                    self.depart(v);
                }
            }
            Clock::General { .. } => {
                let completion = match &mut self.clock {
                    Clock::General {
                        next_arrival,
                        completions,
                    } => match completions.peek() {
                        Some(Reverse(c)) if c.time < *next_arrival => completions.pop().map(|r| r.0.server),
                        _ => {
                            let e: f64 = Exp1.sample(&mut self.rng);
                            *next_arrival = t + e / (self.cfg.lambda * n);
                            None
                        }
                    },
                    Clock::Markov { .. } => unreachable!(),
                };
                match completion {
                    Some(v) => {
                        let v = v as usize;
                        if self.depart(v) > 0 {
                            self.schedule(v);
                        }
                    }
                    None => {
                        let v = self.route();
                        if self.arrive(v) == 1 {
                            self.schedule(v);
                        }
                    }
                }
            }
        }
    }

    fn schedule(&mut self, v: usize) {
        let s = self.cfg.service.sample(&mut self.rng);
        if let Clock::General { completions, .. } = &mut self.clock {
            completions.push(Reverse(Completion {
                time: self.clock_time + s,
                server: v as u32,
            }));
        }
    }

    fn arrive(&mut self, v: usize) -> u32 {
        let level = self.state.length(v) as usize + 1;
        if let Some(avg) = &mut self.averager {
            avg.touch(level, self.state.count(level), self.clock_time);
        }
        self.arrivals += 1;
        self.state.add(v)
    }

    fn depart(&mut self, v: usize) -> u32 {
        let level = self.state.length(v) as usize;
        if let Some(avg) = &mut self.averager {
            avg.touch(level, self.state.count(level), self.clock_time);
        }
        self.departures += 1;
        self.state.remove(v)
    }

    /// Dispatcher pick, server sample and shortest-queue choice.
    fn route(&mut self) -> usize {
        let w = self.rng.gen_range(0..self.graph.n_dispatchers());
        let nb = self.graph.servers_of(w);
        let s = nb.len();
        let k = self.cfg.d.min(s);
        let mut best = u32::MAX;
        let mut ties = 0u32;
        let mut chosen = 0usize;
        let mut consider = |v: usize, rng: &mut SimRng| {
            let len = self.state.length(v);
            if len < best {
                best = len;
                ties = 1;
                chosen = v;
            } else if len == best {
                ties += 1;
                if rng.gen_range(0..ties) == 0 {
                    chosen = v;
                }
            }
        };
        if k == s {
            self.scratch.clear();
            self.scratch.extend(0..s);
        } else {
            floyd_sample(&mut self.rng, s, k, &mut self.scratch);
        }
        for &pos in &self.scratch {
            consider(nb.get(pos), &mut self.rng);
        }
        if let Some(trace) = &mut self.trace {
            trace.dispatcher = w;
            trace.sampled.clear();
            trace.sampled.extend(self.scratch.iter().map(|&pos| {
                let v = nb.get(pos);
                (v, self.state.length(v))
            }));
            trace.chosen = chosen;
        }
        chosen
    }
}

/// Runs one trajectory from time 0 to `cfg.horizon`.
pub fn simulate(graph: &BipartiteGraph, cfg: &SimConfig) -> Result<TrajectoryRecord, SimError> {
    let mut sim = Simulation::new(graph, cfg, rng_from_seed(cfg.seed))?;
    let mut rec = TrajectoryRecord::new(cfg.depth);
    rec.initial_tasks = sim.state.total_tasks();
    let mut sampler = Sampler::new(cfg.sample_interval, cfg.horizon);
    sim.run_until(cfg.horizon, Some((&mut sampler, &mut rec)))?;
    if cfg.verify_every.is_some() {
        sim.verify()?;
    }
    rec.event_count = sim.events;
    rec.arrival_count = sim.arrivals;
    rec.departure_count = sim.departures;
    rec.final_tasks = sim.state.total_tasks();
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{braess_example, complete_bipartite, GraphKind, GraphSpec};

    fn cfg(d: usize, lambda: f64, horizon: f64, seed: u64) -> SimConfig {
        let mut c = SimConfig::new(d, lambda, horizon, seed);
        c.verify_every = Some(1);
        c
    }

    #[test]
    fn mm1_busy_fraction() {
        let g = complete_bipartite(1, 1).unwrap();
        let mut sim = Simulation::new(&g, &cfg(1, 0.5, 1e4, 11), rng_from_seed(11)).unwrap();
        sim.start_averaging();
        sim.run_until(1e4, None).unwrap();
        let q = sim.averages().unwrap();
        assert!((q[0] - 0.5).abs() < 0.02, "{}", q[0]);
    }

    #[test]
    fn arrival_count_concentrates() {
        let g = complete_bipartite(100, 100).unwrap();
        let (lambda, horizon) = (0.7, 1000.0);
        let mut c = cfg(2, lambda, horizon, 3);
        c.verify_every = Some(997);
        let rec = simulate(&g, &c).unwrap();
        let mean = lambda * 100.0 * horizon;
        assert!((rec.arrival_count as f64 - mean).abs() <= 4.0 * mean.sqrt());
        assert_eq!(rec.arrival_count - rec.departure_count, rec.final_tasks - rec.initial_tasks);
    }

    #[test]
    fn deterministic_given_seed() {
        let g = GraphSpec::new(GraphKind::FixedServerDegree { n: 60, m: 40, c: 5 }, 2).build().unwrap();
        for service in [ServiceDistribution::Exponential, ServiceDistribution::Deterministic, ServiceDistribution::PARETO3] {
            let mut c = cfg(2, 0.9, 30.0, 8);
            c.service = service;
            let a = simulate(&g, &c).unwrap();
            let b = simulate(&g, &c).unwrap();
            assert_eq!(a, b);
            c.seed = 9;
            assert_ne!(a, simulate(&g, &c).unwrap());
        }
    }

    #[test]
    fn samples_on_grid_and_monotone() {
        let g = braess_example();
        let mut c = cfg(2, 0.6, 5.0, 1);
        c.depth = 4;
        c.sample_interval = 0.5;
        c.initial = Some(vec![6, 0, 2, 1, 0, 0]);
        c.allow_disconnected = true;
        let rec = simulate(&g, &c).unwrap();
        assert_eq!(rec.sample_times.len(), 11);
        assert_eq!(rec.initial_tasks, 9);
        assert!((rec.overflow[0] - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(rec.occupancy[0], vec![3.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]);
        for q in &rec.occupancy {
            assert!(q.windows(2).all(|w| w[0] >= w[1]));
        }
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,q1,q2,q3,q4,overflow");
        assert!(text.lines().nth(2).unwrap().starts_with("0.5,"));
    }

    #[test]
    fn splitting_a_run_changes_nothing() {
        let g = complete_bipartite(20, 10).unwrap();
        for service in [ServiceDistribution::Exponential, ServiceDistribution::PARETO3] {
            let mut c = cfg(2, 0.8, 20.0, 4);
            c.service = service;
            let mut a = Simulation::new(&g, &c, rng_from_seed(4)).unwrap();
            a.run_until(20.0, None).unwrap();
            let mut b = Simulation::new(&g, &c, rng_from_seed(4)).unwrap();
            for k in 1..=40 {
                b.run_until(k as f64 * 0.5, None).unwrap();
            }
            assert_eq!(a.state(), b.state());
            assert_eq!(a.event_count(), b.event_count());
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let g = complete_bipartite(3, 3).unwrap();
        assert!(simulate(&g, &cfg(2, 1.0, 1.0, 0)).is_err());
        assert!(simulate(&g, &cfg(0, 0.5, 1.0, 0)).is_err());
        assert!(simulate(&g, &cfg(2, 0.5, 0.0, 0)).is_err());
        let mut c = cfg(2, 1.2, 1.0, 0);
        c.allow_unstable = true;
        assert!(simulate(&g, &c).is_ok());
        let split = GraphSpec::new(GraphKind::Matching { n: 3 }, 0).build().unwrap();
        assert!(matches!(simulate(&split, &cfg(1, 0.5, 1.0, 0)), Err(SimError::Disconnected(3))));
    }
}
