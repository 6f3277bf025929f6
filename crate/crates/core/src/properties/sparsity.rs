//! Proportional-sparsity deficiency: the largest fraction of dispatchers whose
//! neighborhood over- or under-represents some server subset `U` by at least
//! `epsilon`.

use rand::seq::SliceRandom;
use rand::Rng;

use super::PropertyError;
use crate::graph::BipartiteGraph;
use crate::sampling::{floyd_sample, rng_from_seed};

/// Largest `N` accepted by exact enumeration.
pub const EXACT_MAX_SERVERS: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparsityMode {
    Exact,
    Sampled,
}

impl SparsityMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SparsityMode::Exact => "exact",
            SparsityMode::Sampled => "sampled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsityReport {
    pub epsilon: f64,
    /// Bad-dispatcher fraction at `witness_subset`.
    pub deficiency: f64,
    pub witness_subset: Vec<usize>,
    /// `Exact` when every subset was examined; `Sampled` results are lower
    /// bounds on the supremum.
    pub mode: SparsityMode,
    pub subsets_probed: u64,
}

impl SparsityReport {
    pub fn is_lower_bound(&self) -> bool {
        self.mode == SparsityMode::Sampled
    }
}

/// Bad-dispatcher bookkeeping for one candidate subset.
struct Counter<'g> {
    graph: &'g BipartiteGraph,
    degree: Vec<i64>,
    n: i64,
    /// `epsilon * |N_w| * N`, the integer-scaled threshold.
    threshold: Vec<f64>,
    hits: Vec<i64>,
    size: i64,
}

impl<'g> Counter<'g> {
    fn new(graph: &'g BipartiteGraph, epsilon: f64) -> Self {
        let n = graph.n_servers() as i64;
        let degree: Vec<i64> = (0..graph.n_dispatchers())
            .map(|w| graph.dispatcher_degree(w) as i64)
            .collect();
        let threshold = degree.iter().map(|&d| epsilon * (d * n) as f64).collect();
        Counter {
            graph,
            hits: vec![0; degree.len()],
            degree,
            n,
            threshold,
            size: 0,
        }
    }

    /// `| |N_w ∩ U|/|N_w| - |U|/N | >= epsilon`, evaluated on integers so that
    /// `U` and its complement agree exactly.
    #[inline]
    fn bad(&self, w: usize, hits: i64, size: i64) -> bool {
        ((hits * self.n - size * self.degree[w]).abs() as f64) >= self.threshold[w]
    }

    fn bad_count_at(&self, shift: i64) -> usize {
        (0..self.degree.len())
            .filter(|&w| self.bad(w, self.hits[w], self.size + shift))
            .count()
    }

    fn toggle(&mut self, v: usize, add: bool) {
        let delta = if add { 1 } else { -1 };
        for w in self.graph.dispatchers_of(v).iter() {
            self.hits[w] += delta;
        }
        self.size += delta;
    }

    fn load(&mut self, subset: &[usize]) {
        self.hits.iter_mut().for_each(|h| *h = 0);
        self.size = 0;
        for &v in subset {
            self.toggle(v, true);
        }
    }

    /// Bad count after toggling `v`, given the counts at `size ± 1`.
    fn count_after_toggle(&self, v: usize, add: bool, shifted_total: usize) -> usize {
        let (dh, ds) = if add { (1, 1) } else { (-1, -1) };
        let mut count = shifted_total as i64;
        for w in self.graph.dispatchers_of(v).iter() {
            count -= self.bad(w, self.hits[w], self.size + ds) as i64;
            count += self.bad(w, self.hits[w] + dh, self.size + ds) as i64;
        }
        count as usize
    }
}

fn mask_to_subset(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&v| mask >> v & 1 == 1).collect()
}

/// Exhaustive search. With `half`, only subsets excluding the last server are
/// visited; complements have identical bad sets.
fn enumerate(graph: &BipartiteGraph, epsilon: f64, half: bool) -> (usize, u64, u64) {
    let n = graph.n_servers();
    let free = if half { n.saturating_sub(1) } else { n };
    let mut counter = Counter::new(graph, epsilon);
    let mut best = counter.bad_count_at(0);
    let mut best_mask = 0u64;
    let mut mask = 0u64;
    let total = 1u64 << free;
    for i in 1..total {
        let bit = i.trailing_zeros() as usize;
        let add = mask >> bit & 1 == 0;
        mask ^= 1 << bit;
        counter.toggle(bit, add);
        let bad = counter.bad_count_at(0);
        if bad > best {
            best = bad;
            best_mask = mask;
        }
    }
    (best, best_mask, total)
}

/// Greedy single-server flips from `start` while the bad count increases.
fn local_search<R: Rng>(counter: &mut Counter<'_>, start: &[usize], rng: &mut R) -> (usize, Vec<bool>, u64) {
    let n = counter.graph.n_servers();
    let mut member = vec![false; n];
    for &v in start {
        member[v] = true;
    }
    counter.load(start);
    let mut current = counter.bad_count_at(0);
    let mut evaluations = 0u64;
    let mut order: Vec<usize> = (0..n).collect();
    loop {
        let mut plus = counter.bad_count_at(1);
        let mut minus = if counter.size > 0 { counter.bad_count_at(-1) } else { 0 };
        let mut improved = false;
        order.shuffle(rng);
        for &v in &order {
            let add = !member[v];
            // Never move to the trivial subsets, which have no bad dispatchers.
            if (add && counter.size + 1 == n as i64) || (!add && counter.size == 1) {
                continue;
            }
            evaluations += 1;
            let after = counter.count_after_toggle(v, add, if add { plus } else { minus });
            if after > current {
                counter.toggle(v, add);
                member[v] = add;
                current = after;
                improved = true;
                plus = counter.bad_count_at(1);
                minus = if counter.size > 0 { counter.bad_count_at(-1) } else { 0 };
            }
        }
        if !improved {
            return (current, member, evaluations);
        }
    }
}

/// Sup over server subsets of the bad-dispatcher fraction.
///
/// `Exact` enumerates all subsets (requires `N <= 22`). `Sampled` probes
/// `budget` random subsets with sizes uniform on `1..N`, then runs a greedy
/// local search from the best one; its result is a lower bound. A sampled
/// request with `budget >= 2^N` is answered exhaustively.
pub fn sparsity_deficiency(
    graph: &BipartiteGraph,
    epsilon: f64,
    mode: SparsityMode,
    budget: u64,
    seed: u64,
) -> Result<SparsityReport, PropertyError> {
    if !(epsilon > 0.0) {
        return Err(PropertyError::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let n = graph.n_servers();
    let m = graph.n_dispatchers() as f64;
    let exhaustive = match mode {
        SparsityMode::Exact => {
            if n > EXACT_MAX_SERVERS {
                return Err(PropertyError::ExactTooLarge { n_servers: n, max: EXACT_MAX_SERVERS });
            }
            true
        }
        SparsityMode::Sampled => n < 64 && budget >= 1u64 << n,
    };
    if exhaustive {
        let (best, mask, probed) = enumerate(graph, epsilon, true);
        return Ok(SparsityReport {
            epsilon,
            deficiency: best as f64 / m,
            witness_subset: mask_to_subset(mask, n),
            mode: SparsityMode::Exact,
            subsets_probed: probed,
        });
    }
    let mut rng = rng_from_seed(seed);
    let mut counter = Counter::new(graph, epsilon);
    let mut best = (0usize, Vec::new());
    let mut subset = Vec::new();
    let mut probed = 0u64;
    if n >= 2 {
        for _ in 0..budget {
            let size = rng.gen_range(1..n);
            floyd_sample(&mut rng, n, size, &mut subset);
            counter.load(&subset);
            let bad = counter.bad_count_at(0);
            probed += 1;
            if bad > best.0 || best.1.is_empty() {
                best = (bad, subset.clone());
            }
        }
    }
    if !best.1.is_empty() {
        let (bad, member, evaluations) = local_search(&mut counter, &best.1, &mut rng);
        probed += evaluations;
        if bad > best.0 {
            best = (bad, (0..n).filter(|&v| member[v]).collect());
        }
    }
    let mut witness = best.1;
    witness.sort_unstable();
    Ok(SparsityReport {
        epsilon,
        deficiency: best.0 as f64 / m,
        witness_subset: witness,
        mode: SparsityMode::Sampled,
        subsets_probed: probed,
    })
}

/// Bad-dispatcher fraction of one given subset.
pub fn deficiency_of_subset(graph: &BipartiteGraph, epsilon: f64, subset: &[usize]) -> f64 {
    let mut counter = Counter::new(graph, epsilon);
    counter.load(subset);
    counter.bad_count_at(0) as f64 / graph.n_dispatchers() as f64
}
