//! Subcriticality: the smallest achievable maximum normalized server load
//! under a static randomized assignment rule.
//!
//! Each dispatcher `w` spreads normalized arrival mass `N/M` evenly over the
//! size-`min(d, |N_w|)` subsets `U` of its neighborhood, and each subset
//! forwards its share to its members according to a distribution
//! `gamma_w^U`. The load of server `v` is the mass it receives.

use super::flow::FlowNetwork;
use super::PropertyError;
use crate::graph::BipartiteGraph;

/// Default cap on enumerated `(w, U)` pairs.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;
const BISECTION_ITERATIONS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformMetric {
    /// `max_v (N/M) * sum_{w ~ v} 1/|N_w|`.
    pub value: f64,
    pub argmax_server: usize,
}

/// One dispatcher/subset pair and how its mass is split.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetRule {
    pub dispatcher: usize,
    pub subset: Vec<usize>,
    /// `gamma_w^U(v)` for each member of `subset`, summing to 1.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalLoad {
    pub load: f64,
    /// Feasible rule attaining `load` (up to the bisection tolerance).
    pub rules: Vec<SubsetRule>,
    /// Number of `(w, U, v)` triples with positive weight.
    pub gamma_support_size: usize,
    /// Per-server loads under `rules`.
    pub server_loads: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubcriticalityReport {
    pub uniform_metric: f64,
    /// `None` when the instance exceeds the enumeration cap.
    pub optimal_load: Option<f64>,
    pub argmax_server: usize,
    pub gamma_support_size: Option<usize>,
}

/// Max normalized load under the uniform rule. Independent of `d`: a uniform
/// `gamma` over uniform `U` hands every neighbor `1/|N_w|` of `w`'s mass.
pub fn uniform_subcriticality_metric(graph: &BipartiteGraph, _d: usize) -> UniformMetric {
    if graph.is_complete() {
        return UniformMetric {
            value: 1.0,
            argmax_server: 0,
        };
    }
    let scale = graph.n_servers() as f64 / graph.n_dispatchers() as f64;
    let inv_degree: Vec<f64> = (0..graph.n_dispatchers())
        .map(|w| 1.0 / graph.dispatcher_degree(w) as f64)
        .collect();
    let mut best = UniformMetric {
        value: f64::NEG_INFINITY,
        argmax_server: 0,
    };
    for v in 0..graph.n_servers() {
        let load = scale * graph.dispatchers_of(v).iter().map(|w| inv_degree[w]).sum::<f64>();
        if load > best.value {
            best = UniformMetric {
                value: load,
                argmax_server: v,
            };
        }
    }
    best
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Calls `f` with every `k`-subset of `items` in lexicographic order.
fn for_each_subset(items: &[usize], k: usize, mut f: impl FnMut(&[usize])) {
    let n = items.len();
    let mut idx: Vec<usize> = (0..k).collect();
    let mut current: Vec<usize> = idx.iter().map(|&i| items[i]).collect();
    loop {
        f(&current);
        let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[pos] += 1;
        for j in pos + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
        for j in pos..k {
            current[j] = items[idx[j]];
        }
    }
}

struct Instance {
    pairs: Vec<(usize, Vec<usize>)>,
    supply: Vec<f64>,
    n_servers: usize,
}

impl Instance {
    fn build(graph: &BipartiteGraph, d: usize, cap: u64) -> Result<Self, PropertyError> {
        let mut total: u64 = 0;
        for w in 0..graph.n_dispatchers() {
            let n = graph.dispatcher_degree(w) as u64;
            let k = (d as u64).min(n);
            total = total.saturating_add(binomial(n, k));
        }
        if total > cap {
            return Err(PropertyError::EnumerationCap { pairs: total, cap });
        }
        let scale = graph.n_servers() as f64 / graph.n_dispatchers() as f64;
        let mut pairs = Vec::with_capacity(total as usize);
        let mut supply = Vec::with_capacity(total as usize);
        for w in 0..graph.n_dispatchers() {
            let nbrs: Vec<usize> = graph.servers_of(w).iter().collect();
            let k = d.min(nbrs.len());
            let share = scale / binomial(nbrs.len() as u64, k as u64) as f64;
            for_each_subset(&nbrs, k, |u| {
                pairs.push((w, u.to_vec()));
                supply.push(share);
            });
        }
        Ok(Instance {
            pairs,
            supply,
            n_servers: graph.n_servers(),
        })
    }

    fn total_supply(&self) -> f64 {
        self.supply.iter().sum()
    }

    /// Max flow with server capacity `t`, plus the network and member-edge handles.
    fn solve(&self, t: f64) -> (f64, FlowNetwork, Vec<Vec<(usize, usize)>>) {
        let p = self.pairs.len();
        let source = 0;
        let sink = 1 + p + self.n_servers;
        let mut net = FlowNetwork::new(sink + 1);
        let mut handles = Vec::with_capacity(p);
        for (i, (_, subset)) in self.pairs.iter().enumerate() {
            net.add_edge(source, 1 + i, self.supply[i]);
            handles.push(
                subset
                    .iter()
                    .map(|&v| net.add_edge(1 + i, 1 + p + v, self.supply[i]))
                    .collect(),
            );
        }
        for v in 0..self.n_servers {
            net.add_edge(1 + p + v, sink, t);
        }
        let flow = net.max_flow(source, sink);
        (flow, net, handles)
    }

    fn feasible(&self, t: f64) -> bool {
        let total = self.total_supply();
        self.solve(t).0 >= total - 1e-10 * total.max(1.0)
    }
}

/// Exact finite-N min-max load by bisection on the target load with a
/// max-flow feasibility check.
pub fn optimal_subcriticality_load(
    graph: &BipartiteGraph,
    d: usize,
    cap: u64,
) -> Result<OptimalLoad, PropertyError> {
    if d == 0 {
        return Err(PropertyError::InvalidParameter("d must be >= 1".into()));
    }
    let inst = Instance::build(graph, d, cap)?;
    let mut lo = 1.0;
    // The uniform rule is feasible, so its load brackets the optimum; the
    // small pad absorbs rounding in the flow.
    let mut hi = uniform_subcriticality_metric(graph, d).value + 1e-12;
    if !inst.feasible(hi) {
        return Err(PropertyError::Internal(format!(
            "uniform load {hi} reported infeasible"
        )));
    }
    if inst.feasible(lo) {
        hi = lo;
    } else {
        for _ in 0..BISECTION_ITERATIONS {
            let mid = 0.5 * (lo + hi);
            if inst.feasible(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let (_, net, handles) = inst.solve(hi);
    let mut rules = Vec::with_capacity(inst.pairs.len());
    let mut server_loads = vec![0.0; inst.n_servers];
    let mut support = 0;
    for (i, (w, subset)) in inst.pairs.iter().enumerate() {
        let flows: Vec<f64> = handles[i]
            .iter()
            .map(|&h| net.flow_on(h, inst.supply[i]).max(0.0))
            .collect();
        let sent: f64 = flows.iter().sum();
        let weights: Vec<f64> = if sent > 0.0 {
            flows.iter().map(|f| f / sent).collect()
        } else {
            vec![1.0 / subset.len() as f64; subset.len()]
        };
        for (&v, &g) in subset.iter().zip(&weights) {
            server_loads[v] += inst.supply[i] * g;
            if g > 1e-12 {
                support += 1;
            }
        }
        rules.push(SubsetRule {
            dispatcher: *w,
            subset: subset.clone(),
            weights,
        });
    }
    Ok(OptimalLoad {
        load: hi,
        rules,
        gamma_support_size: support,
        server_loads,
    })
}

/// Uniform metric always; the optimum when the instance is small enough.
pub fn subcriticality_report(graph: &BipartiteGraph, d: usize, cap: u64) -> Result<SubcriticalityReport, PropertyError> {
    let uniform = uniform_subcriticality_metric(graph, d);
    let optimal = match optimal_subcriticality_load(graph, d, cap) {
        Ok(opt) => Some(opt),
        Err(PropertyError::EnumerationCap { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(SubcriticalityReport {
        uniform_metric: uniform.value,
        optimal_load: optimal.as_ref().map(|o| o.load),
        argmax_server: uniform.argmax_server,
        gamma_support_size: optimal.map(|o| o.gamma_support_size),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{braess_example, complete_bipartite, perfect_matching};
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_metric_examples() {
        assert_eq!(uniform_subcriticality_metric(&complete_bipartite(7, 3).unwrap(), 2).value, 1.0);
        let m = uniform_subcriticality_metric(&perfect_matching(5).unwrap(), 2);
        assert_eq!(m.value, 1.0);
        let b = uniform_subcriticality_metric(&braess_example(), 2);
        assert_abs_diff_eq!(b.value, 7.0 / 3.0, epsilon = 1e-15);
        assert!(b.argmax_server <= 1);
        assert_eq!(uniform_subcriticality_metric(&braess_example(), 5).value, b.value);
    }

    #[test]
    fn uniform_metric_brute_force() {
        // Sum over the explicit adjacency, server by server.
        let g = BipartiteGraph::from_edges(3, 2, [(0, 0), (1, 0), (2, 0), (0, 1)]).unwrap();
        // server 0: 1/3 + 1/1, scaled by 3/2.
        let m = uniform_subcriticality_metric(&g, 2);
        assert_abs_diff_eq!(m.value, 1.5 * (1.0 / 3.0 + 1.0), epsilon = 1e-15);
        assert_eq!(m.argmax_server, 0);
    }

    #[test]
    fn optimal_load_examples() {
        let k = optimal_subcriticality_load(&complete_bipartite(4, 4).unwrap(), 2, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_abs_diff_eq!(k.load, 1.0, epsilon = 1e-9);
        let b = optimal_subcriticality_load(&braess_example(), 2, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_abs_diff_eq!(b.load, 5.0 / 3.0, epsilon = 1e-6);
        let max_load = b.server_loads.iter().cloned().fold(0.0, f64::max);
        assert!(max_load <= b.load + 1e-9);
        let total: f64 = b.server_loads.iter().sum();
        assert_abs_diff_eq!(total, 6.0, epsilon = 1e-9);
        let m = optimal_subcriticality_load(&perfect_matching(6).unwrap(), 2, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_abs_diff_eq!(m.load, 1.0, epsilon = 1e-9);
        assert_eq!(m.gamma_support_size, 6);
    }

    #[test]
    fn gamma_rules_are_distributions() {
        let b = optimal_subcriticality_load(&braess_example(), 2, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(b.rules.len(), 2 + 4 * 3);
        for r in &b.rules {
            assert_abs_diff_eq!(r.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
            assert!(r.weights.iter().all(|&g| g >= 0.0));
        }
    }

    #[test]
    fn enumeration_cap_refuses() {
        let err = optimal_subcriticality_load(&complete_bipartite(100, 100).unwrap(), 3, 1000).unwrap_err();
        assert!(matches!(err, PropertyError::EnumerationCap { .. }));
        let report = subcriticality_report(&complete_bipartite(100, 100).unwrap(), 3, 1000).unwrap();
        assert_eq!(report.optimal_load, None);
        assert_eq!(report.uniform_metric, 1.0);
    }

    #[test]
    fn subsets_enumerated_lexicographically() {
        let mut seen = Vec::new();
        for_each_subset(&[3, 5, 8, 9], 2, |s| seen.push(s.to_vec()));
        assert_eq!(seen, vec![vec![3, 5], vec![3, 8], vec![3, 9], vec![5, 8], vec![5, 9], vec![8, 9]]);
        let mut all = 0;
        for_each_subset(&[1, 2, 3], 3, |_| all += 1);
        assert_eq!(all, 1);
        assert_eq!(binomial(10, 3), 120);
        assert_eq!(binomial(5, 0), 1);
    }
}
