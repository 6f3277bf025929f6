//! Assignment probability functions over empirical queue-length distributions.
//!
//! A policy maps the distribution `x` (fraction of servers with exactly `i`
//! tasks, `i = 0, 1, ...`) seen by a dispatcher to the probability `p_i` that
//! an arriving task joins a queue of length `i`. Step (b) of a generic policy
//! (picking a uniform server at the chosen length) lives in the simulator.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use thiserror::Error;

/// Tolerance on `sum(x) == 1` for a valid distribution.
pub const DISTRIBUTION_TOL: f64 = 1e-12;
/// Tolerance on `sum(p) == 1` for a policy output.
pub const NORMALIZATION_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("invalid queue-length distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid occupancy vector: {0}")]
    InvalidOccupancy(String),
    #[error("policy {name} violates normalization: {detail}")]
    Normalization { name: String, detail: String },
    #[error("unknown policy {0:?} (expected \"jsq-d:<d>\")")]
    UnknownPolicy(String),
    #[error("invalid policy parameter: {0}")]
    InvalidParameter(String),
}

/// Fractions `x_0, x_1, ...` of servers with each exact queue length.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueLengthDistribution(Vec<f64>);

impl QueueLengthDistribution {
    pub fn new(x: Vec<f64>) -> Result<Self, PolicyError> {
        if x.is_empty() {
            return Err(PolicyError::InvalidDistribution("empty vector".into()));
        }
        if let Some((i, v)) = x.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(PolicyError::InvalidDistribution(format!("x[{i}] = {v} outside [0, 1]")));
        }
        let total: f64 = x.iter().sum();
        if (total - 1.0).abs() > DISTRIBUTION_TOL {
            return Err(PolicyError::InvalidDistribution(format!("entries sum to {total}")));
        }
        Ok(QueueLengthDistribution(x))
    }

    /// Empirical distribution from per-length server counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self, PolicyError> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(PolicyError::InvalidDistribution("no servers".into()));
        }
        Self::new(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn occupancy(&self) -> OccupancyVector {
        OccupancyVector(tail_sums(&self.0)[1..self.0.len()].to_vec())
    }
}

/// Occupancy `q_1, q_2, ...`: fraction of servers with at least `i` tasks.
/// `q_0 = 1` and the tail beyond the stored entries is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyVector(Vec<f64>);

impl OccupancyVector {
    pub fn new(q: Vec<f64>) -> Result<Self, PolicyError> {
        let mut prev = 1.0;
        for (i, &v) in q.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(PolicyError::InvalidOccupancy(format!("q_{} = {v} outside [0, 1]", i + 1)));
            }
            if v > prev {
                return Err(PolicyError::InvalidOccupancy(format!("q_{} = {v} exceeds q_{i} = {prev}", i + 1)));
            }
            prev = v;
        }
        Ok(OccupancyVector(q))
    }

    pub(crate) fn from_vec_unchecked(q: Vec<f64>) -> Self {
        OccupancyVector(q)
    }

    /// `q_i` with the conventions `q_0 = 1` and a zero tail.
    pub fn get(&self, i: usize) -> f64 {
        match i {
            0 => 1.0,
            _ => self.0.get(i - 1).copied().unwrap_or(0.0),
        }
    }

    /// Stored levels `q_1..q_K`.
    pub fn levels(&self) -> &[f64] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    /// `sum_i q_i`, the mean queue length.
    pub fn mean_queue_length(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn to_distribution(&self) -> QueueLengthDistribution {
        let k = self.0.len();
        let x = (0..=k).map(|i| self.get(i) - self.get(i + 1)).collect();
        QueueLengthDistribution(x)
    }
}

/// `out[i] = sum_{j >= i} x[j]`, with one trailing zero.
fn tail_sums(x: &[f64]) -> Vec<f64> {
    let mut q = vec![0.0; x.len() + 1];
    for i in (0..x.len()).rev() {
        q[i] = q[i + 1] + x[i];
    }
    q
}

/// Task assignment policy in assignment-probability form.
pub trait AssignmentPolicy: Send + Sync {
    fn name(&self) -> String;

    /// Declared Lipschitz constant `K`, if known.
    fn lipschitz_bound(&self) -> Option<f64>;

    /// Raw evaluator: `p[i]` for `i in 0..x.len()`. No validation of `x`.
    fn probabilities(&self, x: &[f64]) -> Vec<f64>;

    /// Validated evaluation; checks the output contract.
    fn evaluate(&self, x: &QueueLengthDistribution) -> Result<Vec<f64>, PolicyError> {
        let p = self.probabilities(x.as_slice());
        check_output(&self.name(), x.as_slice(), &p)?;
        Ok(p)
    }
}

fn check_output(name: &str, x: &[f64], p: &[f64]) -> Result<(), PolicyError> {
    let fail = |detail: String| {
        Err(PolicyError::Normalization {
            name: name.to_string(),
            detail,
        })
    };
    if let Some((i, v)) = p.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return fail(format!("p[{i}] = {v} outside [0, 1]"));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return fail(format!("probabilities sum to {total}"));
    }
    for (i, &pi) in p.iter().enumerate() {
        if pi > 0.0 && x.get(i).copied().unwrap_or(0.0) == 0.0 {
            return fail(format!("p[{i}] = {pi} > 0 but no server has length {i}"));
        }
    }
    Ok(())
}

/// Sample `d` compatible servers and join the shortest.
///
/// In distribution form `p_{i-1} = q_{i-1}^d - q_i^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JsqD {
    d: u32,
}

pub fn jsqd_policy(d: u32) -> Result<JsqD, PolicyError> {
    if d == 0 {
        return Err(PolicyError::InvalidParameter("d must be >= 1".into()));
    }
    Ok(JsqD { d })
}

impl JsqD {
    pub fn d(&self) -> u32 {
        self.d
    }

    /// `p_{i-1} = q_{i-1}^d - q_i^d` from an occupancy prefix `q_0..q_K`
    /// (with `q_{K+1} = 0`).
    pub fn probabilities_from_occupancy(&self, q: &[f64]) -> Vec<f64> {
        let d = self.d as i32;
        (0..q.len())
            .map(|i| {
                let next = q.get(i + 1).copied().unwrap_or(0.0);
                q[i].powi(d) - next.powi(d)
            })
            .collect()
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

impl AssignmentPolicy for JsqD {
    fn name(&self) -> String {
        format!("jsq-d:{}", self.d)
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        let d = f64::from(self.d);
        Some(2.0 * factorial(self.d) * d * d)
    }

    fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let mut q = tail_sums(x);
        q.pop();
        self.probabilities_from_occupancy(&q)
    }
}

/// Policy backed by an arbitrary closure, for user-supplied rules.
pub struct FnPolicy<F> {
    name: String,
    bound: Option<f64>,
    f: F,
}

impl<F> FnPolicy<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(name: impl Into<String>, bound: Option<f64>, f: F) -> Self {
        FnPolicy {
            name: name.into(),
            bound,
            f,
        }
    }
}

impl<F> AssignmentPolicy for FnPolicy<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn name(&self) -> String {
        self.name.clone()
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        self.bound
    }

    fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
}

/// Parses `"jsq-d:<d>"`.
pub fn policy_from_name(name: &str) -> Result<JsqD, PolicyError> {
    let d = name
        .strip_prefix("jsq-d:")
        .and_then(|d| d.parse::<u32>().ok())
        .ok_or_else(|| PolicyError::UnknownPolicy(name.to_string()))?;
    jsqd_policy(d)
}

/// Smallest `i` whose cumulative probability exceeds `u`.
///
/// Rounding slack at the top end falls back to the last index with positive
/// mass, so zero-probability lengths are never returned.
pub fn invert_cdf(p: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        cum += pi;
        if u < cum {
            return i;
        }
    }
    p.iter().rposition(|&pi| pi > 0.0).unwrap_or(0)
}

/// Draws the queue length a task joins, distributed as `p(x)`.
pub fn sample_assignment_length<P, R>(policy: &P, x: &QueueLengthDistribution, rng: &mut R) -> usize
where
    P: AssignmentPolicy + ?Sized,
    R: Rng + ?Sized,
{
    let p = policy.probabilities(x.as_slice());
    invert_cdf(&p, rng.gen::<f64>())
}

const PROBE_MAX_SUPPORT: usize = 30;
const PROBE_EPSILONS: [f64; 3] = [1e-3, 1e-2, 1e-1];

/// Uniform point on the simplex over `offset..offset + len`.
fn random_distribution<R: Rng + ?Sized>(rng: &mut R, offset: usize, len: usize) -> Vec<f64> {
    let mut x = vec![0.0; offset + len];
    let mut total = 0.0;
    for slot in &mut x[offset..] {
        let e: f64 = Exp1.sample(rng);
        *slot = e;
        total += e;
    }
    for slot in &mut x[offset..] {
        *slot /= total;
    }
    x
}

fn random_base<R: Rng + ?Sized>(rng: &mut R) -> Vec<f64> {
    let len = rng.gen_range(1..=PROBE_MAX_SUPPORT);
    let offset = rng.gen_range(0..=2);
    random_distribution(rng, offset, len)
}

/// Ratio `sum|p(x) - p(y)| / sum|x - y|`, or `None` when `x == y`.
pub fn lipschitz_ratio<P: AssignmentPolicy + ?Sized>(policy: &P, x: &[f64], y: &[f64]) -> Option<f64> {
    let len = x.len().max(y.len());
    let pad = |v: &[f64]| {
        let mut v = v.to_vec();
        v.resize(len, 0.0);
        v
    };
    let (x, y) = (pad(x), pad(y));
    let dx: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
    if dx == 0.0 {
        return None;
    }
    let (px, py) = (pad(&policy.probabilities(&x)), pad(&policy.probabilities(&y)));
    let dp: f64 = px.iter().zip(&py).map(|(a, b)| (a - b).abs()).sum();
    Some(dp / dx)
}

/// Largest observed Lipschitz ratio over `trials` random probe pairs.
///
/// Even trials compare two independent uniform-simplex draws; odd trials move
/// mass `eps` (cycling through 1e-3, 1e-2, 1e-1) between two levels of a
/// random base distribution.
pub fn empirical_lipschitz<P, R>(policy: &P, trials: usize, rng: &mut R) -> f64
where
    P: AssignmentPolicy + ?Sized,
    R: Rng + ?Sized,
{
    let mut best = 0.0f64;
    for t in 0..trials {
        let x = random_base(rng);
        let y = if t % 2 == 0 {
            random_base(rng)
        } else {
            let eps = PROBE_EPSILONS[(t / 2) % PROBE_EPSILONS.len()];
            let mut y = x.clone();
            y.push(0.0);
            let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] > 0.0).collect();
            let from = support[rng.gen_range(0..support.len())];
            let mut to = rng.gen_range(0..y.len() - 1);
            if to >= from {
                to += 1;
            }
            let moved = eps.min(y[from]);
            y[from] -= moved;
            y[to] += moved;
            y
        };
        if let Some(r) = lipschitz_ratio(policy, &x, &y) {
            best = best.max(r);
        }
    }
    best
}
