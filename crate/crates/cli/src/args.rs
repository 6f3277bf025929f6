use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "flexsim", version, about = "JSQ(d) load balancing on bipartite compatibility graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a graph and write it in BPG text form.
    Gen(GenArgs),
    /// Sparsity deficiency and subcriticality of a graph.
    Check(CheckArgs),
    /// One occupancy trajectory.
    Simulate(SimulateArgs),
    /// Replicated steady-state averages.
    Steady(SteadyArgs),
    /// Graph system coupled with the fully flexible system.
    Coupled(CoupledArgs),
    /// Integrate the mean-field ODE.
    Ode(OdeArgs),
    /// Trajectory distances between two occupancy CSV files.
    Compare(CompareArgs),
    /// Canned experiment recipes.
    Reproduce(ReproduceArgs),
}

/// Where the graph comes from: a file, or generator flags.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct GraphArgs {
    /// Read the graph from this file instead of generating one.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// complete | matching | fixed-degree | inhomogeneous | geometric | braess
    #[arg(long)]
    pub kind: Option<String>,
    /// Servers.
    #[arg(long)]
    pub n: Option<usize>,
    /// Dispatchers (defaults to n).
    #[arg(long)]
    pub m: Option<usize>,
    /// Server degree for fixed-degree graphs.
    #[arg(long)]
    pub c: Option<usize>,
    /// Edge probability; one value, or one per dispatcher.
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Generator seed (defaults to --seed).
    #[arg(long)]
    pub graph_seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct GenArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with defaults for any of the flags above.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct CheckArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    /// exact | sampled | auto
    #[arg(long)]
    pub mode: Option<String>,
    /// Random subsets per sampled probe.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Cap on enumerated (dispatcher, subset) pairs for the optimal load.
    #[arg(long)]
    pub cap: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// exponential | deterministic | pareto
    #[arg(long)]
    pub service: Option<String>,
    #[arg(long)]
    pub sample_interval: Option<f64>,
    #[arg(long)]
    pub depth: Option<usize>,
    /// Initial queue lengths, one per server.
    #[arg(long, value_delimiter = ',')]
    pub initial: Option<Vec<u32>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub allow_disconnected: Option<bool>,
    /// Full state check every this many events (0 disables).
    #[arg(long)]
    pub verify_every: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct SteadyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Discarded prefix (defaults to 10 / (1 - lambda)).
    #[arg(long)]
    pub warmup: Option<f64>,
    #[arg(long)]
    pub measure: Option<f64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Independent graph instances; replica r runs on instance r mod graphs.
    #[arg(long)]
    pub graphs: Option<usize>,
    #[arg(long)]
    pub service: Option<String>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub allow_disconnected: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct CoupledArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub sample_interval: Option<f64>,
    #[arg(long)]
    pub depth: Option<usize>,
    /// Stop after this many uniformized events.
    #[arg(long)]
    pub max_events: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub allow_disconnected: Option<bool>,
    #[arg(long)]
    pub verify_every: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct OdeArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub sample_interval: Option<f64>,
    /// empty | fixed-point | comma-separated q1,q2,...
    #[arg(long)]
    pub start: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct CompareArgs {
    /// First occupancy CSV.
    pub a: Option<PathBuf>,
    /// Second occupancy CSV.
    pub b: Option<PathBuf>,
    /// Compare only q1..qK.
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct ReproduceArgs {
    /// erg-trajectories | degree-sweep | lambda-sweep | service-sweep | geometric-vs-errg
    pub figure: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub services: Option<Vec<String>>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Average degree of the constant-degree family.
    #[arg(long)]
    pub constant_degree: Option<f64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long)]
    pub warmup: Option<f64>,
    #[arg(long)]
    pub measure: Option<f64>,
    /// Trajectory length for erg-trajectories.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Levels reported by erg-trajectories.
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}
