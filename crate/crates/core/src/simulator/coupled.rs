//! Joint run of the constrained system and its fully flexible counterpart.
//!
//! Both systems see the same arrival epochs and the same potential departure
//! epochs (uniformized at rate `N`). A potential departure hits the server of
//! rank `j` (by decreasing queue length) in each system. An arrival picks
//! the queue length to join from the local (constrained) or global (flexible)
//! distribution through one shared uniform, so the two lengths differ only
//! when the two distributions disagree. `Delta` counts those disagreements,
//! and `2 Delta >= sum_i |Q_i(K) - Q_i(G)|` holds along every path.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::engine::{Sampler, TrajectoryRecord};
use super::{check_common, SimError, DEBUG_VERIFY_EVERY, DEFAULT_DEPTH, DEFAULT_SAMPLE_INTERVAL};
use crate::graph::BipartiteGraph;
use crate::policy::{invert_cdf, jsqd_policy, JsqD};
use crate::sampling::{rng_from_seed, SimRng};

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledConfig {
    pub d: usize,
    pub lambda: f64,
    pub horizon: f64,
    pub seed: u64,
    pub depth: usize,
    pub sample_interval: f64,
    /// Stop early after this many events.
    pub max_events: Option<u64>,
    pub allow_disconnected: bool,
    pub verify_every: Option<u64>,
}

impl CoupledConfig {
    pub fn new(d: usize, lambda: f64, horizon: f64, seed: u64) -> Self {
        CoupledConfig {
            d,
            lambda,
            horizon,
            seed,
            depth: DEFAULT_DEPTH,
            sample_interval: DEFAULT_SAMPLE_INTERVAL,
            max_events: None,
            allow_disconnected: false,
            verify_every: cfg!(debug_assertions).then_some(DEBUG_VERIFY_EVERY),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledTrajectory {
    /// Constrained system.
    pub g: TrajectoryRecord,
    /// Fully flexible system.
    pub k: TrajectoryRecord,
    /// `Delta` at each sample time.
    pub delta_samples: Vec<u64>,
    /// Smallest margin seen up to each sample time.
    pub margin_min_samples: Vec<i64>,
    pub delta: u64,
    pub min_margin: i64,
    /// Arrivals plus potential departures.
    pub events: u64,
    pub end_time: f64,
}

impl CoupledTrajectory {
    /// `t,q1..qK,overflow,k_q1..k_qK,k_overflow,delta,margin_min_so_far`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let depth = self.g.depth;
        write!(out, "{}", TrajectoryRecord::csv_header(depth))?;
        for i in 1..=depth {
            write!(out, ",k_q{i}")?;
        }
        writeln!(out, ",k_overflow,delta,margin_min_so_far")?;
        for s in 0..self.g.sample_times.len() {
            write!(out, "{}", self.g.sample_times[s])?;
            for v in &self.g.occupancy[s] {
                write!(out, ",{v}")?;
            }
            write!(out, ",{}", self.g.overflow[s])?;
            for v in &self.k.occupancy[s] {
                write!(out, ",{v}")?;
            }
            writeln!(
                out,
                ",{},{},{}",
                self.k.overflow[s], self.delta_samples[s], self.margin_min_samples[s]
            )?;
        }
        Ok(())
    }

    pub fn mismatch_fraction(&self) -> f64 {
        if self.g.arrival_count == 0 {
            0.0
        } else {
            self.delta as f64 / self.g.arrival_count as f64
        }
    }
}

/// Queue lengths with servers bucketed by exact length, so the server of a
/// given rank can be found without sorting.
#[derive(Debug, Clone)]
struct Ranked {
    lengths: Vec<u32>,
    counts: Vec<u64>,
    buckets: Vec<Vec<u32>>,
    slot: Vec<u32>,
}

impl Ranked {
    fn new(n: usize) -> Self {
        Ranked {
            lengths: vec![0; n],
            counts: vec![n as u64],
            buckets: vec![(0..n as u32).collect()],
            slot: (0..n as u32).collect(),
        }
    }

    fn n(&self) -> usize {
        self.lengths.len()
    }

    fn count(&self, i: usize) -> u64 {
        self.counts.get(i).copied().unwrap_or(0)
    }

    fn move_server(&mut self, v: usize, from: usize, to: usize) {
        let pos = self.slot[v] as usize;
        self.buckets[from].swap_remove(pos);
        if let Some(&moved) = self.buckets[from].get(pos) {
            self.slot[moved as usize] = pos as u32;
        }
        if to == self.buckets.len() {
            self.buckets.push(Vec::new());
        }
        self.slot[v] = self.buckets[to].len() as u32;
        self.buckets[to].push(v as u32);
    }

    /// Returns the level whose count went up.
    fn add(&mut self, v: usize) -> usize {
        let old = self.lengths[v] as usize;
        self.lengths[v] += 1;
        if old + 1 == self.counts.len() {
            self.counts.push(0);
        }
        self.counts[old + 1] += 1;
        self.move_server(v, old, old + 1);
        old + 1
    }

    /// Returns the level whose count went down.
    fn remove(&mut self, v: usize) -> usize {
        let old = self.lengths[v] as usize;
        self.lengths[v] -= 1;
        self.counts[old] -= 1;
        if old + 1 == self.counts.len() && self.counts[old] == 0 {
            self.counts.pop();
        }
        self.move_server(v, old, old - 1);
        old
    }

    /// Length of the server of rank `j` (1-based, longest first).
    fn level_of_rank(&self, j: u64) -> usize {
        (0..self.counts.len()).rev().find(|&i| self.counts[i] >= j).unwrap_or(0)
    }

    fn server_at_rank(&self, j: u64) -> usize {
        let level = self.level_of_rank(j);
        let above = self.count(level + 1);
        self.buckets[level][(j - above - 1) as usize] as usize
    }

    fn pick_at_level(&self, level: usize, rng: &mut SimRng) -> usize {
        let bucket = &self.buckets[level];
        bucket[rng.gen_range(0..bucket.len())] as usize
    }

    /// Occupancy `q_0..q_L` as fractions.
    fn occupancy_into(&self, out: &mut Vec<f64>) {
        let n = self.n() as f64;
        out.clear();
        out.extend(self.counts.iter().map(|&c| c as f64 / n));
    }

    fn record(&self, depth: usize) -> (Vec<f64>, f64) {
        let n = self.n() as f64;
        let q = (1..=depth).map(|i| self.count(i) as f64 / n).collect();
        (q, self.count(depth + 1) as f64 / n)
    }

    fn verify(&self) -> Result<(), String> {
        let max = self.lengths.iter().copied().max().unwrap_or(0) as usize;
        let mut fresh = vec![0u64; max + 1];
        for &len in &self.lengths {
            for c in &mut fresh[..=len as usize] {
                *c += 1;
            }
        }
        if fresh != self.counts {
            return Err(format!("counts {:?} but recount gives {fresh:?}", self.counts));
        }
        for (level, bucket) in self.buckets.iter().enumerate() {
            let expected = self.count(level) - self.count(level + 1);
            if bucket.len() as u64 != expected {
                return Err(format!("bucket {level} holds {} servers, expected {expected}", bucket.len()));
            }
            for (pos, &v) in bucket.iter().enumerate() {
                if self.lengths[v as usize] as usize != level || self.slot[v as usize] as usize != pos {
                    return Err(format!("server {v} misfiled in bucket {level}"));
                }
            }
        }
        Ok(())
    }
}

struct Coupled<'g> {
    graph: &'g BipartiteGraph,
    policy: JsqD,
    g: Ranked,
    k: Ranked,
    diff_sum: u64,
    delta: u64,
    rng: SimRng,
    q_buf: Vec<f64>,
    hist: Vec<u64>,
    g_departures: u64,
    k_departures: u64,
    arrivals: u64,
}

impl Coupled<'_> {
    fn level_diff(&self, level: usize) -> u64 {
        self.g.count(level).abs_diff(self.k.count(level))
    }

    fn change(&mut self, in_g: bool, v: usize, add: bool) {
        let level = if add {
            self.g_or_k(in_g).lengths[v] as usize + 1
        } else {
            self.g_or_k(in_g).lengths[v] as usize
        };
        let before = self.level_diff(level);
        let sys = if in_g { &mut self.g } else { &mut self.k };
        if add {
            sys.add(v);
        } else {
            sys.remove(v);
        }
        let after = self.level_diff(level);
        self.diff_sum = self.diff_sum + after - before;
    }

    fn g_or_k(&self, in_g: bool) -> &Ranked {
        if in_g {
            &self.g
        } else {
            &self.k
        }
    }

    fn arrival(&mut self) {
        let w = self.rng.gen_range(0..self.graph.n_dispatchers());
        let u: f64 = self.rng.gen();

        self.k.occupancy_into(&mut self.q_buf);
        let i_k = invert_cdf(&self.policy.probabilities_from_occupancy(&self.q_buf), u);

        let v_g = if self.graph.is_complete() {
            self.g.occupancy_into(&mut self.q_buf);
            let i_g = invert_cdf(&self.policy.probabilities_from_occupancy(&self.q_buf), u);
            if i_g != i_k {
                self.delta += 1;
            }
            self.g.pick_at_level(i_g, &mut self.rng)
        } else {
            let nb = self.graph.servers_of(w);
            self.hist.clear();
            for v in nb.iter() {
                let len = self.g.lengths[v] as usize;
                if len >= self.hist.len() {
                    self.hist.resize(len + 1, 0);
                }
                self.hist[len] += 1;
            }
            let deg = nb.len() as f64;
            self.q_buf.clear();
            let mut tail = 0u64;
            let mut rev = Vec::with_capacity(self.hist.len());
            for &h in self.hist.iter().rev() {
                tail += h;
                rev.push(tail as f64 / deg);
            }
            self.q_buf.extend(rev.into_iter().rev());
            let i_g = invert_cdf(&self.policy.probabilities_from_occupancy(&self.q_buf), u);
            if i_g != i_k {
                self.delta += 1;
            }
            let target = self.rng.gen_range(0..self.hist[i_g]);
            nb.iter()
                .filter(|&v| self.g.lengths[v] as usize == i_g)
                .nth(target as usize)
                .expect("histogram count matches neighbors")
        };
        let v_k = self.k.pick_at_level(i_k, &mut self.rng);
        self.change(true, v_g, true);
        self.change(false, v_k, true);
        self.arrivals += 1;
    }

    fn potential_departure(&mut self) {
        let j = self.rng.gen_range(1..=self.g.n() as u64);
        if self.g.level_of_rank(j) > 0 {
            let v = self.g.server_at_rank(j);
            self.change(true, v, false);
            self.g_departures += 1;
        }
        if self.k.level_of_rank(j) > 0 {
            let v = self.k.server_at_rank(j);
            self.change(false, v, false);
            self.k_departures += 1;
        }
    }

    fn margin(&self) -> i64 {
        2 * self.delta as i64 - self.diff_sum as i64
    }

    fn verify(&self) -> Result<(), String> {
        self.g.verify().map_err(|e| format!("constrained system: {e}"))?;
        self.k.verify().map_err(|e| format!("flexible system: {e}"))?;
        let levels = self.g.counts.len().max(self.k.counts.len());
        let fresh: u64 = (0..levels).map(|i| self.level_diff(i)).sum();
        if fresh != self.diff_sum {
            return Err(format!("difference sum {} but recount gives {fresh}", self.diff_sum));
        }
        Ok(())
    }
}

/// Runs both systems from empty until `cfg.horizon` (or `cfg.max_events`).
/// A negative margin is reported as [`SimError::MarginViolation`].
pub fn coupled_simulate(graph: &BipartiteGraph, cfg: &CoupledConfig) -> Result<CoupledTrajectory, SimError> {
    check_common(graph, cfg.lambda, cfg.d, cfg.allow_disconnected, false)?;
    if !(cfg.horizon > 0.0 && cfg.horizon.is_finite()) || !(cfg.sample_interval > 0.0) || cfg.depth == 0 {
        return Err(SimError::InvalidParameter(
            "horizon, sample interval and depth must be positive".into(),
        ));
    }
    let n = graph.n_servers();
    let mut sys = Coupled {
        graph,
        policy: jsqd_policy(cfg.d as u32).map_err(|e| SimError::InvalidParameter(e.to_string()))?,
        g: Ranked::new(n),
        k: Ranked::new(n),
        diff_sum: 0,
        delta: 0,
        rng: rng_from_seed(cfg.seed),
        q_buf: Vec::new(),
        hist: Vec::new(),
        g_departures: 0,
        k_departures: 0,
        arrivals: 0,
    };
    let mut g_rec = TrajectoryRecord::new(cfg.depth);
    let mut k_rec = TrajectoryRecord::new(cfg.depth);
    let mut delta_samples = Vec::new();
    let mut margin_samples = Vec::new();
    let mut sampler = Sampler::new(cfg.sample_interval, cfg.horizon);
    let rate = (1.0 + cfg.lambda) * n as f64;
    let p_arrival = cfg.lambda / (1.0 + cfg.lambda);
    let mut t = 0.0;
    let mut events = 0u64;
    let mut min_margin = 0i64;

    loop {
        let e: f64 = Exp1.sample(&mut sys.rng);
        let te = t + e / rate;
        let capped = cfg.max_events.is_some_and(|m| events >= m);
        let stop = te > cfg.horizon || capped;
        let limit = match (capped, stop) {
            (true, _) => t,
            (false, true) => cfg.horizon,
            (false, false) => te,
        };
        while let Some(s) = sampler.due(limit) {
            for (rec, ranked) in [(&mut g_rec, &sys.g), (&mut k_rec, &sys.k)] {
                let (q, over) = ranked.record(cfg.depth);
                rec.sample_times.push(s);
                rec.occupancy.push(q);
                rec.overflow.push(over);
            }
            delta_samples.push(sys.delta);
            margin_samples.push(min_margin);
            sampler.advance();
        }
        if stop {
            t = if capped { t } else { cfg.horizon };
            break;
        }
        t = te;
        if sys.rng.gen::<f64>() < p_arrival {
            sys.arrival();
        } else {
            sys.potential_departure();
        }
        events += 1;
        let margin = sys.margin();
        min_margin = min_margin.min(margin);
        if margin < 0 {
            return Err(SimError::MarginViolation { event: events, time: t, margin });
        }
        if let Some(every) = cfg.verify_every {
            if events.is_multiple_of(every) {
                sys.verify().map_err(|detail| SimError::Invariant { event: events, detail })?;
            }
        }
    }

    let total = |r: &Ranked| r.lengths.iter().map(|&l| u64::from(l)).sum::<u64>();
    for (rec, ranked, departures) in [(&mut g_rec, &sys.g, sys.g_departures), (&mut k_rec, &sys.k, sys.k_departures)] {
        rec.event_count = events;
        rec.arrival_count = sys.arrivals;
        rec.departure_count = departures;
        rec.final_tasks = total(ranked);
    }
    Ok(CoupledTrajectory {
        g: g_rec,
        k: k_rec,
        delta_samples,
        margin_min_samples: margin_samples,
        delta: sys.delta,
        min_margin,
        events,
        end_time: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{braess_example, complete_bipartite, GraphKind, GraphSpec};

    fn cfg(d: usize, lambda: f64, horizon: f64, seed: u64) -> CoupledConfig {
        let mut c = CoupledConfig::new(d, lambda, horizon, seed);
        c.verify_every = Some(1);
        c
    }

    #[test]
    fn ranks_follow_decreasing_length() {
        let mut r = Ranked::new(4);
        for v in [2, 2, 2, 0, 3, 3] {
            r.add(v);
        }
        // Lengths: 0 -> 1, 2 -> 3, 3 -> 2.
        assert_eq!(r.server_at_rank(1), 2);
        assert_eq!(r.server_at_rank(2), 3);
        assert_eq!(r.server_at_rank(3), 0);
        assert_eq!(r.level_of_rank(4), 0);
        r.remove(2);
        r.remove(2);
        r.verify().unwrap();
        assert_eq!(r.counts, vec![4, 3, 1]);
    }

    #[test]
    fn complete_graph_never_mismatches() {
        let g = complete_bipartite(40, 25).unwrap();
        let out = coupled_simulate(&g, &cfg(2, 0.9, 30.0, 3)).unwrap();
        assert_eq!(out.delta, 0);
        assert_eq!(out.min_margin, 0);
        assert!(out.g.occupancy.iter().zip(&out.k.occupancy).all(|(a, b)| a == b));
    }

    #[test]
    fn margin_holds_on_sparse_graphs() {
        let specs = [
            GraphKind::FixedServerDegree { n: 60, m: 60, c: 3 },
            GraphKind::Inhomogeneous { n: 50, m: 80, p: vec![0.06; 80] },
            GraphKind::Geometric { n: 70, m: 70, radius: 0.25 },
        ];
        for (i, kind) in specs.into_iter().enumerate() {
            let graph = GraphSpec::new(kind, i as u64).build().unwrap();
            let mut c = cfg(2, 0.85, 40.0, 10 + i as u64);
            c.allow_disconnected = true;
            let out = coupled_simulate(&graph, &c).unwrap();
            assert!(out.min_margin >= 0);
            assert!(out.delta_samples.windows(2).all(|w| w[0] <= w[1]));
            assert!(out.events > 1000);
        }
        let out = coupled_simulate(&braess_example(), &cfg(2, 0.5, 50.0, 1)).unwrap();
        assert!(out.delta > 0);
    }

    #[test]
    fn deterministic_and_csv() {
        let g = braess_example();
        let mut c = cfg(2, 0.6, 3.0, 9);
        c.depth = 3;
        c.sample_interval = 1.0;
        let a = coupled_simulate(&g, &c).unwrap();
        assert_eq!(a, coupled_simulate(&g, &c).unwrap());
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "t,q1,q2,q3,overflow,k_q1,k_q2,k_q3,k_overflow,delta,margin_min_so_far"
        );
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn event_cap_stops_early() {
        let g = complete_bipartite(10, 10).unwrap();
        let mut c = cfg(2, 0.5, 1e6, 2);
        c.max_events = Some(500);
        let out = coupled_simulate(&g, &c).unwrap();
        assert_eq!(out.events, 500);
        assert!(out.end_time < 1e6);
    }
}
