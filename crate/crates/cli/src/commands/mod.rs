mod check;
mod compare;
mod gen;
mod ode;
mod reproduce;
mod sim;

pub use check::check;
pub use compare::{compare, TrajectoryDistance};
pub use gen::gen;
pub use ode::ode;
pub use reproduce::reproduce;
pub use sim::{coupled, simulate, steady};

use flexsim_core::graph::{read_graph, BipartiteGraph, GraphKind, GraphSpec};
use flexsim_core::simulator::ServiceDistribution;

use crate::args::GraphArgs;
use crate::config::Metadata;
use crate::error::{CliError, Result};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_LAMBDA: f64 = 0.8;
pub const DEFAULT_D: usize = 2;
pub const DEFAULT_HORIZON: f64 = 20.0;

fn required<T>(value: Option<T>, kind: &str, flag: &str) -> Result<T> {
    value.ok_or_else(|| CliError::usage(format!("--kind {kind} needs --{flag}")))
}

pub(crate) fn graph_kind(g: &GraphArgs) -> Result<GraphKind> {
    let kind = g
        .kind
        .as_deref()
        .ok_or_else(|| CliError::usage("either --graph or --kind is required"))?;
    let n = || required(g.n, kind, "n");
    Ok(match kind {
        "complete" => {
            let n = n()?;
            GraphKind::Complete { n, m: g.m.unwrap_or(n) }
        }
        "matching" => GraphKind::Matching { n: n()? },
        "fixed-degree" => {
            let n = n()?;
            GraphKind::FixedServerDegree {
                n,
                m: g.m.unwrap_or(n),
                c: required(g.c, kind, "c")?,
            }
        }
        "inhomogeneous" | "erdos-renyi" | "er" => {
            let n = n()?;
            let m = g.m.unwrap_or(n);
            let p = required(g.p.clone(), kind, "p")?;
            let p = match p.len() {
                1 => vec![p[0]; m],
                len if len == m => p,
                len => return Err(CliError::usage(format!("--p has {len} values for {m} dispatchers"))),
            };
            GraphKind::Inhomogeneous { n, m, p }
        }
        "geometric" => {
            let n = n()?;
            GraphKind::Geometric {
                n,
                m: g.m.unwrap_or(n),
                radius: required(g.radius, kind, "radius")?,
            }
        }
        "braess" => GraphKind::Braess,
        other => return Err(CliError::usage(format!("unknown graph kind {other:?}"))),
    })
}

/// Read or generate the graph and describe it in `meta`.
pub(crate) fn load_graph(g: &GraphArgs, seed: u64, meta: &mut Metadata) -> Result<BipartiteGraph> {
    let graph = match &g.graph {
        Some(path) => {
            let graph = read_graph(path).map_err(|e| CliError::io(path.display(), e))?;
            meta.push("graph", path.display());
            graph
        }
        None => {
            let spec = GraphSpec::new(graph_kind(g)?, seed);
            let graph = spec.build()?;
            meta.push("graph", spec.kind_name());
            meta.push("graph_seed", seed);
            meta.push("generation_retries", graph.generation_retries());
            graph
        }
    };
    meta.push("n_servers", graph.n_servers())
        .push("n_dispatchers", graph.n_dispatchers())
        .push("edges", graph.n_edges());
    Ok(graph)
}

pub(crate) fn service(name: Option<&str>) -> Result<ServiceDistribution> {
    let name = name.unwrap_or("exponential");
    ServiceDistribution::from_name(name).ok_or_else(|| CliError::usage(format!("unknown service distribution {name:?}")))
}

/// `0` disables periodic verification.
pub(crate) fn verify_every(flag: Option<u64>, default: Option<u64>) -> Option<u64> {
    match flag {
        Some(0) => None,
        Some(k) => Some(k),
        None => default,
    }
}
