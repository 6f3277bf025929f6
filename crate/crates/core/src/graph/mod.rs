//! Bipartite compatibility graphs between servers and dispatchers.
//!
//! Servers are indexed `0..n_servers`, dispatchers (task types) `0..n_dispatchers`.
//! The complete bipartite graph is stored implicitly so that fully flexible
//! systems with 10^4 servers and 10^4 dispatchers cost no adjacency memory.

mod generate;
mod io;

pub use generate::{
    braess_example, complete_bipartite, generate_fixed_server_degree, generate_geometric,
    generate_inhomogeneous, perfect_matching, GraphSpec, GraphKind, MAX_GENERATION_RETRIES,
};
pub use io::{read_graph, write_graph, parse_graph, render_graph};

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid graph parameter: {0}")]
    InvalidParameter(String),
    #[error("dispatcher {0} has no compatible server")]
    IsolatedDispatcher(usize),
    #[error("edge ({server}, {dispatcher}) out of range for N={n_servers}, M={n_dispatchers}")]
    IndexOutOfRange {
        server: usize,
        dispatcher: usize,
        n_servers: usize,
        n_dispatchers: usize,
    },
    #[error("duplicate edge ({server}, {dispatcher})")]
    DuplicateEdge { server: usize, dispatcher: usize },
    #[error("could not generate a graph without isolated dispatchers after {attempts} attempts ({kind})")]
    RetriesExhausted { kind: &'static str, attempts: usize },
    #[error("malformed graph file at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
enum Adjacency {
    Complete,
    Explicit {
        by_dispatcher: Vec<Vec<u32>>,
        by_server: Vec<Vec<u32>>,
    },
}

/// Planar positions of a random geometric graph, kept for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct Positions {
    pub servers: Vec<(f64, f64)>,
    pub dispatchers: Vec<(f64, f64)>,
}

/// Immutable bipartite compatibility graph.
#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    n_servers: usize,
    n_dispatchers: usize,
    adjacency: Adjacency,
    positions: Option<Positions>,
    generation_retries: usize,
}

/// Neighborhood of a dispatcher or server.
#[derive(Debug, Clone, Copy)]
pub enum Neighbors<'a> {
    /// All indices `0..n`.
    All(usize),
    List(&'a [u32]),
}

impl<'a> Neighbors<'a> {
    #[inline]
    pub fn len(&self) -> usize {
        match *self {
            Neighbors::All(n) => n,
            Neighbors::List(l) => l.len(),
        }
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The `pos`-th neighbor in ascending order.
    #[inline]
    pub fn get(&self, pos: usize) -> usize {
        match *self {
            Neighbors::All(_) => pos,
            Neighbors::List(l) => l[pos] as usize,
        }
    }

    pub fn contains(&self, idx: usize) -> bool {
        match *self {
            Neighbors::All(n) => idx < n,
            Neighbors::List(l) => l.binary_search(&(idx as u32)).is_ok(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + 'a {
        let this = *self;
        (0..this.len()).map(move |p| this.get(p))
    }
}

impl BipartiteGraph {
    pub(crate) fn complete(n_servers: usize, n_dispatchers: usize) -> Self {
        BipartiteGraph {
            n_servers,
            n_dispatchers,
            adjacency: Adjacency::Complete,
            positions: None,
            generation_retries: 0,
        }
    }

    /// Builds a graph from an edge list of `(server, dispatcher)` pairs.
    ///
    /// Rejects out-of-range indices, duplicate edges and dispatchers without
    /// any compatible server. An edge list covering every pair is stored as
    /// the implicit complete graph.
    pub fn from_edges(
        n_servers: usize,
        n_dispatchers: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        if n_servers == 0 || n_dispatchers == 0 {
            return Err(GraphError::InvalidParameter(
                "graph needs at least one server and one dispatcher".into(),
            ));
        }
        if n_servers > u32::MAX as usize || n_dispatchers > u32::MAX as usize {
            return Err(GraphError::InvalidParameter("graph too large".into()));
        }
        let mut by_dispatcher: Vec<Vec<u32>> = vec![Vec::new(); n_dispatchers];
        for (server, dispatcher) in edges {
            if server >= n_servers || dispatcher >= n_dispatchers {
                return Err(GraphError::IndexOutOfRange {
                    server,
                    dispatcher,
                    n_servers,
                    n_dispatchers,
                });
            }
            by_dispatcher[dispatcher].push(server as u32);
        }
        for (w, list) in by_dispatcher.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(pair) = list.windows(2).find(|p| p[0] == p[1]) {
                return Err(GraphError::DuplicateEdge {
                    server: pair[0] as usize,
                    dispatcher: w,
                });
            }
        }
        Self::from_dispatcher_lists(n_servers, by_dispatcher)
    }

    /// Builds from per-dispatcher sorted, duplicate-free neighbor lists.
    pub(crate) fn from_dispatcher_lists(
        n_servers: usize,
        by_dispatcher: Vec<Vec<u32>>,
    ) -> Result<Self, GraphError> {
        let n_dispatchers = by_dispatcher.len();
        if let Some(w) = by_dispatcher.iter().position(|l| l.is_empty()) {
            return Err(GraphError::IsolatedDispatcher(w));
        }
        if by_dispatcher.iter().all(|l| l.len() == n_servers) {
            return Ok(Self::complete(n_servers, n_dispatchers));
        }
        let mut by_server: Vec<Vec<u32>> = vec![Vec::new(); n_servers];
        // Dispatchers are visited in ascending order, so server lists come out sorted.
        for (w, list) in by_dispatcher.iter().enumerate() {
            for &v in list {
                by_server[v as usize].push(w as u32);
            }
        }
        Ok(BipartiteGraph {
            n_servers,
            n_dispatchers,
            adjacency: Adjacency::Explicit {
                by_dispatcher,
                by_server,
            },
            positions: None,
            generation_retries: 0,
        })
    }

    pub(crate) fn with_positions(mut self, positions: Positions) -> Self {
        self.positions = Some(positions);
        self
    }

    pub(crate) fn with_retries(mut self, retries: usize) -> Self {
        self.generation_retries = retries;
        self
    }

    pub fn n_servers(&self) -> usize {
        self.n_servers
    }

    pub fn n_dispatchers(&self) -> usize {
        self.n_dispatchers
    }

    pub fn is_complete(&self) -> bool {
        match &self.adjacency {
            Adjacency::Complete => true,
            Adjacency::Explicit { by_dispatcher, .. } => {
                by_dispatcher.iter().all(|l| l.len() == self.n_servers)
            }
        }
    }

    /// Servers compatible with dispatcher `w`, in ascending order.
    #[inline]
    pub fn servers_of(&self, w: usize) -> Neighbors<'_> {
        match &self.adjacency {
            Adjacency::Complete => Neighbors::All(self.n_servers),
            Adjacency::Explicit { by_dispatcher, .. } => Neighbors::List(&by_dispatcher[w]),
        }
    }

    /// Dispatchers compatible with server `v`, in ascending order.
    #[inline]
    pub fn dispatchers_of(&self, v: usize) -> Neighbors<'_> {
        match &self.adjacency {
            Adjacency::Complete => Neighbors::All(self.n_dispatchers),
            Adjacency::Explicit { by_server, .. } => Neighbors::List(&by_server[v]),
        }
    }

    pub fn dispatcher_degree(&self, w: usize) -> usize {
        self.servers_of(w).len()
    }

    pub fn server_degree(&self, v: usize) -> usize {
        self.dispatchers_of(v).len()
    }

    pub fn n_edges(&self) -> usize {
        match &self.adjacency {
            Adjacency::Complete => self.n_servers * self.n_dispatchers,
            Adjacency::Explicit { by_dispatcher, .. } => by_dispatcher.iter().map(Vec::len).sum(),
        }
    }

    pub fn has_edge(&self, server: usize, dispatcher: usize) -> bool {
        dispatcher < self.n_dispatchers && self.servers_of(dispatcher).contains(server)
    }

    /// All edges `(server, dispatcher)` in ascending lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_servers).flat_map(move |v| self.dispatchers_of(v).iter().map(move |w| (v, w)))
    }

    pub fn positions(&self) -> Option<&Positions> {
        self.positions.as_ref()
    }

    /// Number of whole-graph or per-row resamples the generator needed to
    /// avoid isolated dispatchers.
    pub fn generation_retries(&self) -> usize {
        self.generation_retries
    }

    /// Breadth-first search over the bipartite graph.
    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// Number of connected components, counting servers without any edge.
    pub fn component_count(&self) -> usize {
        if let Adjacency::Complete = self.adjacency {
            return 1;
        }
        let n = self.n_servers;
        // Nodes 0..n are servers, n..n+m are dispatchers.
        let mut seen = vec![false; n + self.n_dispatchers];
        let mut queue = VecDeque::new();
        let mut components = 0;
        for start in 0..seen.len() {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(node) = queue.pop_front() {
                let next: Neighbors<'_> = if node < n {
                    self.dispatchers_of(node)
                } else {
                    self.servers_of(node - n)
                };
                let offset = if node < n { n } else { 0 };
                for other in next.iter() {
                    let id = other + offset;
                    if !seen[id] {
                        seen[id] = true;
                        queue.push_back(id);
                    }
                }
            }
        }
        components
    }
}

impl PartialEq for BipartiteGraph {
    /// Graphs are equal when they have the same dimensions and edge set.
    fn eq(&self, other: &Self) -> bool {
        if self.n_servers != other.n_servers || self.n_dispatchers != other.n_dispatchers {
            return false;
        }
        (0..self.n_dispatchers).all(|w| {
            let (a, b) = (self.servers_of(w), other.servers_of(w));
            a.len() == b.len() && a.iter().eq(b.iter())
        })
    }
}

impl Eq for BipartiteGraph {}
