use flexsim_core::graph::render_graph;

use super::{load_graph, DEFAULT_SEED};
use crate::args::GenArgs;
use crate::config::{emit, resolve, Metadata};
use crate::error::Result;

pub fn gen(args: GenArgs) -> Result<()> {
    let cfg = resolve(args.clone(), args.config.as_deref())?;
    let seed = cfg.graph.graph_seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let mut meta = Metadata::new("gen");
    meta.push("seed", seed);
    let graph = load_graph(&cfg.graph, seed, &mut meta)?;
    meta.config(&cfg);
    let mut body = Vec::new();
    render_graph(&graph, &mut body)?;
    emit(cfg.out.as_deref(), &meta, &body)
}
