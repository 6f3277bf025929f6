//! Statistical sweep of the graph conditions over sizes and seeds.

use std::io::Write;

use rayon::prelude::*;

use super::sparsity::{sparsity_deficiency, SparsityMode};
use super::subcritical::{optimal_subcriticality_load, uniform_subcriticality_metric, DEFAULT_ENUMERATION_CAP};
use super::PropertyError;
use crate::graph::{GraphKind, GraphSpec};

/// How the average degree scales with the number of servers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DegreeScaling {
    Constant(f64),
    /// `ln N`
    Log,
    /// `(ln N)^2`
    LogSquared,
}

impl DegreeScaling {
    pub fn degree(&self, n: usize) -> f64 {
        let ln = (n as f64).ln();
        match *self {
            DegreeScaling::Constant(c) => c,
            DegreeScaling::Log => ln,
            DegreeScaling::LogSquared => ln * ln,
        }
    }

    pub fn label(&self) -> String {
        match self {
            DegreeScaling::Constant(c) => format!("const{c}"),
            DegreeScaling::Log => "lnN".into(),
            DegreeScaling::LogSquared => "ln2N".into(),
        }
    }
}

/// A sequence of graphs indexed by `N`, with `M = N` dispatchers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphFamily {
    Complete,
    /// Server degree `ceil(degree(N))`.
    FixedServerDegree(DegreeScaling),
    /// Edge probability `degree(N) / N` for every dispatcher.
    Inhomogeneous(DegreeScaling),
    /// Radius with `pi r^2 N = degree(N)`.
    Geometric(DegreeScaling),
}

impl GraphFamily {
    pub fn name(&self) -> String {
        match self {
            GraphFamily::Complete => "complete".into(),
            GraphFamily::FixedServerDegree(s) => format!("fixed-degree-{}", s.label()),
            GraphFamily::Inhomogeneous(s) => format!("inhomogeneous-{}", s.label()),
            GraphFamily::Geometric(s) => format!("geometric-{}", s.label()),
        }
    }

    pub fn spec(&self, n: usize, seed: u64) -> GraphSpec {
        let m = n;
        let kind = match *self {
            GraphFamily::Complete => GraphKind::Complete { n, m },
            GraphFamily::FixedServerDegree(s) => GraphKind::FixedServerDegree {
                n,
                m,
                c: (s.degree(n).ceil() as usize).clamp(1, m),
            },
            GraphFamily::Inhomogeneous(s) => GraphKind::Inhomogeneous {
                n,
                m,
                p: vec![(s.degree(n) / n as f64).clamp(f64::MIN_POSITIVE, 1.0); m],
            },
            GraphFamily::Geometric(s) => GraphKind::Geometric {
                n,
                m,
                radius: (s.degree(n) / (std::f64::consts::PI * n as f64)).sqrt(),
            },
        };
        GraphSpec::new(kind, seed)
    }
}

#[derive(Debug, Clone)]
pub struct TrendConfig {
    pub epsilons: Vec<f64>,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Random subsets per sampled deficiency probe.
    pub budget: u64,
    pub d: usize,
    /// Also solve the min-max load when the instance is under the cap.
    pub with_optimal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendRow {
    pub family: String,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub deficiency_lb: f64,
    pub uniform_metric: f64,
    pub optimal_load: Option<f64>,
}

pub const TREND_CSV_HEADER: &str =
    "family,N,M,seed,epsilon,deficiency_lb,uniform_metric,optimal_load_or_blank";

impl TrendRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.family,
            self.n,
            self.m,
            self.seed,
            self.epsilon,
            self.deficiency_lb,
            self.uniform_metric,
            self.optimal_load.map(|v| v.to_string()).unwrap_or_default()
        )
    }
}

/// Sampled deficiency and uniform metric for every `(N, seed, epsilon)`.
/// Rows come back sorted by `N`, then seed, then epsilon order.
pub fn sparsity_trend(family: &GraphFamily, cfg: &TrendConfig) -> Result<Vec<TrendRow>, PropertyError> {
    let jobs: Vec<(usize, usize, u64)> = cfg
        .sizes
        .iter()
        .enumerate()
        .flat_map(|(si, &n)| cfg.seeds.iter().map(move |&s| (si, n, s)))
        .collect();
    let mut results: Vec<(usize, u64, Vec<TrendRow>)> = jobs
        .par_iter()
        .map(|&(si, n, seed)| {
            let graph = family.spec(n, seed).build()?;
            let uniform = uniform_subcriticality_metric(&graph, cfg.d).value;
            let optimal = if cfg.with_optimal {
                match optimal_subcriticality_load(&graph, cfg.d, DEFAULT_ENUMERATION_CAP) {
                    Ok(o) => Some(o.load),
                    Err(PropertyError::EnumerationCap { .. }) => None,
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            let rows = cfg
                .epsilons
                .iter()
                .enumerate()
                .map(|(ei, &eps)| {
                    let probe_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (ei as u64);
                    let report = sparsity_deficiency(&graph, eps, SparsityMode::Sampled, cfg.budget, probe_seed)?;
                    Ok(TrendRow {
                        family: family.name(),
                        n: graph.n_servers(),
                        m: graph.n_dispatchers(),
                        seed,
                        epsilon: eps,
                        deficiency_lb: report.deficiency,
                        uniform_metric: uniform,
                        optimal_load: optimal,
                    })
                })
                .collect::<Result<Vec<_>, PropertyError>>()?;
            Ok((si, seed, rows))
        })
        .collect::<Result<_, PropertyError>>()?;
    results.sort_by_key(|(si, seed, _)| (*si, *seed));
    Ok(results.into_iter().flat_map(|(_, _, rows)| rows).collect())
}

pub fn write_trend_csv<W: Write>(rows: &[TrendRow], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{TREND_CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.csv())?;
    }
    Ok(())
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// `(N, median deficiency lower bound, max uniform metric)` at `epsilon`,
/// in the order sizes first appear.
pub fn summarize_trend(rows: &[TrendRow], epsilon: f64) -> Vec<(usize, f64, f64)> {
    let mut sizes: Vec<usize> = Vec::new();
    for r in rows {
        if !sizes.contains(&r.n) {
            sizes.push(r.n);
        }
    }
    sizes
        .into_iter()
        .map(|n| {
            let at: Vec<&TrendRow> = rows.iter().filter(|r| r.n == n && r.epsilon == epsilon).collect();
            let med = median(at.iter().map(|r| r.deficiency_lb).collect());
            let max_uniform = at.iter().map(|r| r.uniform_metric).fold(f64::NEG_INFINITY, f64::max);
            (n, med, max_uniform)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_specs() {
        let spec = GraphFamily::FixedServerDegree(DegreeScaling::LogSquared).spec(4000, 1);
        assert_eq!(spec.kind, GraphKind::FixedServerDegree { n: 4000, m: 4000, c: 69 });
        let spec = GraphFamily::FixedServerDegree(DegreeScaling::LogSquared).spec(250, 1);
        assert_eq!(spec.kind, GraphKind::FixedServerDegree { n: 250, m: 250, c: 31 });
        match GraphFamily::Inhomogeneous(DegreeScaling::Constant(5.0)).spec(100, 0).kind {
            GraphKind::Inhomogeneous { p, .. } => assert!((p[0] - 0.05).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trend_rows_sorted_and_complete() {
        let cfg = TrendConfig {
            epsilons: vec![0.1, 0.2],
            sizes: vec![60, 30],
            seeds: vec![3, 1],
            budget: 16,
            d: 2,
            with_optimal: false,
        };
        let rows = sparsity_trend(&GraphFamily::FixedServerDegree(DegreeScaling::Log), &cfg).unwrap();
        assert_eq!(rows.len(), 8);
        let keys: Vec<(usize, u64, f64)> = rows.iter().map(|r| (r.n, r.seed, r.epsilon)).collect();
        assert_eq!(keys[0], (60, 1, 0.1));
        assert_eq!(keys[1], (60, 1, 0.2));
        assert_eq!(keys[7], (30, 3, 0.2));
        let again = sparsity_trend(&GraphFamily::FixedServerDegree(DegreeScaling::Log), &cfg).unwrap();
        assert_eq!(rows, again);
        let mut buf = Vec::new();
        write_trend_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(TREND_CSV_HEADER));
        assert!(text.lines().nth(1).unwrap().ends_with(','));
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
