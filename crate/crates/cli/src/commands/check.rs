use std::io::Write;

use flexsim_core::properties::{
    sparsity_deficiency, subcriticality_report, SparsityMode, DEFAULT_ENUMERATION_CAP, EXACT_MAX_SERVERS,
};

use super::{load_graph, DEFAULT_D, DEFAULT_SEED};
use crate::args::CheckArgs;
use crate::config::{emit, resolve, Metadata};
use crate::error::{CliError, Result};

const DEFAULT_EPSILONS: [f64; 4] = [0.05, 0.1, 0.2, 0.4];
const DEFAULT_BUDGET: u64 = 4096;

pub const CHECK_HEADER: &str = "epsilon,mode,deficiency,subsets_probed,witness_size,d,uniform_metric,argmax_server,optimal_load,gamma_support_size";

pub fn check(args: CheckArgs) -> Result<()> {
    let cfg = resolve(args.clone(), args.config.as_deref())?;
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let d = cfg.d.unwrap_or(DEFAULT_D);
    let epsilons = cfg.epsilons.clone().unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
    let budget = cfg.budget.unwrap_or(DEFAULT_BUDGET);
    let cap = cfg.cap.unwrap_or(DEFAULT_ENUMERATION_CAP);

    let mut meta = Metadata::new("check");
    meta.push("seed", seed).push("d", d);
    let graph = load_graph(&cfg.graph, cfg.graph.graph_seed.unwrap_or(seed), &mut meta)?;
    let mode = match cfg.mode.as_deref().unwrap_or("auto") {
        "exact" => SparsityMode::Exact,
        "sampled" => SparsityMode::Sampled,
        "auto" if graph.n_servers() <= EXACT_MAX_SERVERS => SparsityMode::Exact,
        "auto" => SparsityMode::Sampled,
        other => return Err(CliError::usage(format!("unknown mode {other:?}"))),
    };
    meta.push("mode", mode.as_str()).config(&cfg);

    let sub = subcriticality_report(&graph, d, cap)?;
    let opt = sub.optimal_load.map(|v| v.to_string()).unwrap_or_default();
    let support = sub.gamma_support_size.map(|v| v.to_string()).unwrap_or_default();
    let mut body = Vec::new();
    writeln!(body, "{CHECK_HEADER}")?;
    for &eps in &epsilons {
        let rep = sparsity_deficiency(&graph, eps, mode, budget, seed)?;
        writeln!(
            body,
            "{},{},{},{},{},{},{},{},{},{}",
            eps,
            rep.mode.as_str(),
            rep.deficiency,
            rep.subsets_probed,
            rep.witness_subset.len(),
            d,
            sub.uniform_metric,
            sub.argmax_server,
            opt,
            support
        )?;
    }
    emit(cfg.out.as_deref(), &meta, &body)
}
