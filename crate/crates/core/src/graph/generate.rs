use rand::Rng;
use rand_distr::{Distribution, Geometric};

use super::{BipartiteGraph, GraphError, Positions};
use crate::sampling::{floyd_sample, rng_from_seed, SimRng};

/// Resample budget for avoiding isolated dispatchers.
pub const MAX_GENERATION_RETRIES: usize = 100;

/// Graph construction recipe.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphKind {
    Complete { n: usize, m: usize },
    Matching { n: usize },
    /// Every server picks `c` distinct dispatchers uniformly at random.
    FixedServerDegree { n: usize, m: usize, c: usize },
    /// Edge `(v, w)` present independently with probability `p[w]`.
    Inhomogeneous { n: usize, m: usize, p: Vec<f64> },
    /// Uniform points in the unit square joined within `radius`.
    Geometric { n: usize, m: usize, radius: f64 },
    Braess,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub kind: GraphKind,
    pub seed: u64,
}

impl GraphSpec {
    pub fn new(kind: GraphKind, seed: u64) -> Self {
        GraphSpec { kind, seed }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            GraphKind::Complete { .. } => "complete",
            GraphKind::Matching { .. } => "matching",
            GraphKind::FixedServerDegree { .. } => "fixed-degree",
            GraphKind::Inhomogeneous { .. } => "inhomogeneous",
            GraphKind::Geometric { .. } => "geometric",
            GraphKind::Braess => "braess",
        }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |msg: String| Err(GraphError::InvalidParameter(msg));
        match &self.kind {
            GraphKind::Complete { n, m } if *n == 0 || *m == 0 => bad("N and M must be >= 1".into()),
            GraphKind::Matching { n } if *n == 0 => bad("N must be >= 1".into()),
            GraphKind::FixedServerDegree { n, m, c } => {
                if *n == 0 || *m == 0 {
                    bad("N and M must be >= 1".into())
                } else if *c == 0 || c > m {
                    bad(format!("server degree c={c} must satisfy 1 <= c <= M={m}"))
                } else {
                    Ok(())
                }
            }
            GraphKind::Inhomogeneous { n, m, p } => {
                if *n == 0 || *m == 0 {
                    bad("N and M must be >= 1".into())
                } else if p.len() != *m {
                    bad(format!("expected {m} edge probabilities, got {}", p.len()))
                } else if let Some(x) = p.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
                    bad(format!("edge probability {x} outside (0, 1]"))
                } else {
                    Ok(())
                }
            }
            GraphKind::Geometric { n, m, radius } => {
                if *n == 0 || *m == 0 {
                    bad("N and M must be >= 1".into())
                } else if !(*radius > 0.0) || !radius.is_finite() {
                    bad(format!("radius must be positive, got {radius}"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<BipartiteGraph, GraphError> {
        self.validate()?;
        match &self.kind {
            GraphKind::Complete { n, m } => complete_bipartite(*n, *m),
            GraphKind::Matching { n } => perfect_matching(*n),
            GraphKind::FixedServerDegree { n, m, c } => {
                generate_fixed_server_degree(*n, *m, *c, self.seed)
            }
            GraphKind::Inhomogeneous { n, m, p } => generate_inhomogeneous(*n, *m, p, self.seed),
            GraphKind::Geometric { n, m, radius } => generate_geometric(*n, *m, *radius, self.seed),
            GraphKind::Braess => Ok(braess_example()),
        }
    }
}

pub fn complete_bipartite(n: usize, m: usize) -> Result<BipartiteGraph, GraphError> {
    if n == 0 || m == 0 {
        return Err(GraphError::InvalidParameter("N and M must be >= 1".into()));
    }
    Ok(BipartiteGraph::complete(n, m))
}

/// Dispatcher `i` compatible with server `i` only. Disconnected for `n >= 2`.
pub fn perfect_matching(n: usize) -> Result<BipartiteGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::InvalidParameter("N must be >= 1".into()));
    }
    BipartiteGraph::from_dispatcher_lists(n, (0..n as u32).map(|i| vec![i]).collect())
}

/// Six servers and six dispatchers: dispatchers 0 and 1 are matched to their
/// own server, dispatchers 2..6 reach their own server plus servers 0 and 1.
pub fn braess_example() -> BipartiteGraph {
    let mut rows: Vec<Vec<u32>> = vec![vec![0], vec![1]];
    rows.extend((2..6u32).map(|w| vec![0, 1, w]));
    BipartiteGraph::from_dispatcher_lists(6, rows).expect("fixture is valid")
}

pub fn generate_fixed_server_degree(
    n: usize,
    m: usize,
    c: usize,
    seed: u64,
) -> Result<BipartiteGraph, GraphError> {
    GraphSpec::new(GraphKind::FixedServerDegree { n, m, c }, seed).validate()?;
    let mut rng = rng_from_seed(seed);
    let mut picks = Vec::with_capacity(c);
    for attempt in 0..=MAX_GENERATION_RETRIES {
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); m];
        for v in 0..n {
            floyd_sample(&mut rng, m, c, &mut picks);
            for &w in &picks {
                rows[w].push(v as u32);
            }
        }
        if rows.iter().all(|r| !r.is_empty()) {
            return Ok(BipartiteGraph::from_dispatcher_lists(n, rows)?.with_retries(attempt));
        }
    }
    Err(GraphError::RetriesExhausted {
        kind: "fixed-degree",
        attempts: MAX_GENERATION_RETRIES + 1,
    })
}

fn bernoulli_row(rng: &mut SimRng, n: usize, p: f64, row: &mut Vec<u32>) {
    row.clear();
    if p >= 1.0 {
        row.extend(0..n as u32);
        return;
    }
    // Skip ahead by geometric gaps instead of flipping n coins.
    let gaps = Geometric::new(p).expect("p in (0, 1)");
    let mut v = gaps.sample(rng);
    while v < n as u64 {
        row.push(v as u32);
        v += 1 + gaps.sample(rng);
    }
}

pub fn generate_inhomogeneous(
    n: usize,
    m: usize,
    p: &[f64],
    seed: u64,
) -> Result<BipartiteGraph, GraphError> {
    GraphSpec::new(
        GraphKind::Inhomogeneous {
            n,
            m,
            p: p.to_vec(),
        },
        seed,
    )
    .validate()?;
    let mut rng = rng_from_seed(seed);
    let mut rows = Vec::with_capacity(m);
    let mut retries = 0;
    for &pw in p {
        let mut row = Vec::new();
        let mut tries = 0;
        loop {
            bernoulli_row(&mut rng, n, pw, &mut row);
            if !row.is_empty() {
                break;
            }
            tries += 1;
            if tries > MAX_GENERATION_RETRIES {
                return Err(GraphError::RetriesExhausted {
                    kind: "inhomogeneous",
                    attempts: tries,
                });
            }
        }
        retries += tries;
        rows.push(row);
    }
    Ok(BipartiteGraph::from_dispatcher_lists(n, rows)?.with_retries(retries))
}

pub fn generate_geometric(
    n: usize,
    m: usize,
    radius: f64,
    seed: u64,
) -> Result<BipartiteGraph, GraphError> {
    GraphSpec::new(GraphKind::Geometric { n, m, radius }, seed).validate()?;
    let mut rng = rng_from_seed(seed);
    let point = |rng: &mut SimRng| (rng.gen::<f64>(), rng.gen::<f64>());
    let servers: Vec<(f64, f64)> = (0..n).map(|_| point(&mut rng)).collect();
    let r2 = radius * radius;
    let mut dispatchers = Vec::with_capacity(m);
    let mut rows = Vec::with_capacity(m);
    let mut retries = 0;
    for _ in 0..m {
        let mut tries = 0;
        loop {
            let (x, y) = point(&mut rng);
            let row: Vec<u32> = servers
                .iter()
                .enumerate()
                .filter(|(_, &(sx, sy))| (sx - x).powi(2) + (sy - y).powi(2) <= r2)
                .map(|(v, _)| v as u32)
                .collect();
            if !row.is_empty() {
                dispatchers.push((x, y));
                rows.push(row);
                break;
            }
            tries += 1;
            if tries > MAX_GENERATION_RETRIES {
                return Err(GraphError::RetriesExhausted {
                    kind: "geometric",
                    attempts: tries,
                });
            }
        }
        retries += tries;
    }
    Ok(BipartiteGraph::from_dispatcher_lists(n, rows)?
        .with_positions(Positions {
            servers,
            dispatchers,
        })
        .with_retries(retries))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_consistent(g: &BipartiteGraph) {
        // Re-derive the reverse adjacency from the forward one.
        let mut rebuilt: Vec<Vec<usize>> = vec![Vec::new(); g.n_servers()];
        for w in 0..g.n_dispatchers() {
            for v in g.servers_of(w).iter() {
                rebuilt[v].push(w);
            }
        }
        for v in 0..g.n_servers() {
            assert_eq!(rebuilt[v], g.dispatchers_of(v).iter().collect::<Vec<_>>());
        }
    }

    #[test]
    fn complete_examples() {
        let g = complete_bipartite(2, 3).unwrap();
        assert_eq!(g.n_edges(), 6);
        assert!((0..3).all(|w| g.dispatcher_degree(w) == 2));
        assert_eq!(complete_bipartite(1, 1).unwrap().n_edges(), 1);
        let big = complete_bipartite(10_000, 10_000).unwrap();
        assert_eq!(big.dispatcher_degree(17), 10_000);
        assert_eq!(big.server_degree(9_999), 10_000);
        assert!(complete_bipartite(0, 3).is_err());
    }

    #[test]
    fn matching_examples() {
        let g = perfect_matching(4).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
        assert_eq!(perfect_matching(1).unwrap(), complete_bipartite(1, 1).unwrap());
        let g6 = perfect_matching(6).unwrap();
        assert_eq!(g6.n_edges(), 6);
        assert_eq!(g6.component_count(), 6);
        assert!(!g6.is_connected());
    }

    #[test]
    fn braess_fixture() {
        let g = braess_example();
        assert_eq!(g.n_edges(), 14);
        assert_eq!(g.server_degree(0), 5);
        assert_eq!(g.server_degree(1), 5);
        assert_eq!(g.server_degree(3), 1);
        let m = perfect_matching(6).unwrap();
        assert!(m.edges().all(|(v, w)| g.has_edge(v, w)));
        assert!(g.is_connected());
        assert_consistent(&g);
    }

    #[test]
    fn fixed_degree_small_cases() {
        let g = generate_fixed_server_degree(4, 4, 4, 1).unwrap();
        assert_eq!(g, complete_bipartite(4, 4).unwrap());
        let g = generate_fixed_server_degree(4, 4, 2, 1).unwrap();
        assert!((0..4).all(|v| g.server_degree(v) == 2));
        assert_eq!(g.n_edges(), 8);
        assert_consistent(&g);
        assert!(generate_fixed_server_degree(4, 4, 5, 1).is_err());
        assert!(generate_fixed_server_degree(4, 4, 0, 1).is_err());
    }

    #[test]
    fn fixed_degree_exhausts_when_isolation_forced() {
        // One server of degree 1 cannot cover two dispatchers.
        let err = generate_fixed_server_degree(1, 2, 1, 5).unwrap_err();
        assert!(matches!(err, GraphError::RetriesExhausted { .. }));
    }

    #[test]
    fn inhomogeneous_edge_cases() {
        let g = generate_inhomogeneous(5, 3, &[1.0, 1.0, 1.0], 9).unwrap();
        assert_eq!(g, complete_bipartite(5, 3).unwrap());
        assert!(generate_inhomogeneous(5, 2, &[0.5, 0.0], 1).is_err());
        assert!(generate_inhomogeneous(5, 2, &[0.5], 1).is_err());
        assert!(generate_inhomogeneous(5, 1, &[1.5], 1).is_err());
    }

    #[test]
    fn geometric_edge_cases() {
        let g = generate_geometric(20, 15, 2f64.sqrt(), 4).unwrap();
        assert!(g.is_complete());
        assert_eq!(g.positions().unwrap().dispatchers.len(), 15);
        assert!(generate_geometric(5, 5, 0.0, 1).is_err());
        assert!(generate_geometric(5, 5, -1.0, 1).is_err());
    }

    #[test]
    fn geometric_edges_match_positions() {
        let radius = 0.3;
        let g = generate_geometric(60, 40, radius, 21).unwrap();
        let pos = g.positions().unwrap();
        for (w, &(x, y)) in pos.dispatchers.iter().enumerate() {
            for (v, &(sx, sy)) in pos.servers.iter().enumerate() {
                let within = ((sx - x).powi(2) + (sy - y).powi(2)).sqrt() <= radius;
                assert_eq!(within, g.has_edge(v, w));
            }
        }
        assert_consistent(&g);
    }

    #[test]
    fn same_seed_same_graph() {
        let a = generate_fixed_server_degree(300, 200, 7, 99).unwrap();
        let b = generate_fixed_server_degree(300, 200, 7, 99).unwrap();
        assert_eq!(a, b);
        let c = generate_fixed_server_degree(300, 200, 7, 100).unwrap();
        assert_ne!(a, c);
        let p = vec![0.05; 100];
        assert_eq!(
            generate_inhomogeneous(100, 100, &p, 3).unwrap(),
            generate_inhomogeneous(100, 100, &p, 3).unwrap()
        );
    }
}
