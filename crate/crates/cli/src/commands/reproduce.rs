//! Canned experiment recipes. Each is a fixed composition of the graph
//! generators with `steady` or `simulate`/`ode`, writing one long-format CSV.
//!
//! | figure              | graphs                                  | output columns |
//! |---------------------|-----------------------------------------|----------------|
//! | `erg-trajectories`  | Erdős–Rényi, degree ln²N                | `source,N,t,q1..qK` |
//! | `degree-sweep`      | Erdős–Rényi, degree c, lnN, ln²N        | `family,N,mean_qlen,stderr` |
//! | `lambda-sweep`      | Erdős–Rényi, degree ln²N                | `lambda,N,mean_qlen,stderr,fixed_point,gap` |
//! | `service-sweep`     | complete and Erdős–Rényi ln²N           | `service,family,N,mean_qlen,stderr` |
//! | `geometric-vs-errg` | Erdős–Rényi and geometric, degree ln²N  | `family,N,mean_qlen,stderr,fixed_point` |

use std::io::Write;

use flexsim_core::meanfield::{fixed_point, integrate_ode, jsqd_drift, OdeConfig};
use flexsim_core::properties::{DegreeScaling, GraphFamily};
use flexsim_core::simulator::{
    simulate, steady_state, ServiceDistribution, SimConfig, SteadyConfig, SteadySummary, DEFAULT_DEPTH,
    DEFAULT_SAMPLE_INTERVAL,
};

use super::{service, DEFAULT_D, DEFAULT_HORIZON, DEFAULT_LAMBDA, DEFAULT_SEED};
use crate::args::ReproduceArgs;
use crate::config::{emit, resolve, Metadata};
use crate::error::{CliError, Result};

pub const FIGURES: [&str; 5] = [
    "erg-trajectories",
    "degree-sweep",
    "lambda-sweep",
    "service-sweep",
    "geometric-vs-errg",
];

const DEFAULT_REPLICAS: usize = 4;
const DEFAULT_MEASURE: f64 = 100.0;
const DEFAULT_LEVELS: usize = 8;
const DEFAULT_CONSTANT_DEGREE: f64 = 4.0;
const DEFAULT_LAMBDAS: [f64; 3] = [0.5, 0.65, 0.8];
const SWEEP_SIZES: [usize; 3] = [250, 1000, 4000];
const TRAJECTORY_SIZES: [usize; 2] = [100, 10_000];
const SERVICE_SIZES: [usize; 1] = [1000];

struct Recipe {
    lambda: f64,
    d: usize,
    replicas: usize,
    warmup: Option<f64>,
    measure: f64,
    seed: u64,
}

impl Recipe {
    fn steady(&self, family: &GraphFamily, n: usize, lambda: f64, svc: ServiceDistribution) -> Result<SteadySummary> {
        let graph = family.spec(n, self.seed).build()?;
        let mut cfg = SteadyConfig::new(self.d, lambda, self.measure, self.replicas, self.seed);
        cfg.warmup = self.warmup;
        cfg.service = svc;
        // Sparse families are allowed to fall apart; that is what they show.
        cfg.allow_disconnected = true;
        Ok(steady_state(&graph, &cfg)?)
    }
}

fn fixed_point_mean(lambda: f64, d: usize) -> Result<f64> {
    Ok(fixed_point(lambda, d as u32, 64)?.mean_queue_length())
}

const ERRG_LN2: GraphFamily = GraphFamily::Inhomogeneous(DegreeScaling::LogSquared);

pub fn reproduce(args: ReproduceArgs) -> Result<()> {
    let a = resolve(args.clone(), args.config.as_deref())?;
    let figure = a
        .figure
        .clone()
        .ok_or_else(|| CliError::usage(format!("reproduce needs a figure: {}", FIGURES.join(", "))))?;
    let r = Recipe {
        lambda: a.lambda.unwrap_or(DEFAULT_LAMBDA),
        d: a.d.unwrap_or(DEFAULT_D),
        replicas: a.replicas.unwrap_or(DEFAULT_REPLICAS),
        warmup: a.warmup,
        measure: a.measure.unwrap_or(DEFAULT_MEASURE),
        seed: a.seed.unwrap_or(DEFAULT_SEED),
    };
    let sizes = |default: &[usize]| a.sizes.clone().unwrap_or_else(|| default.to_vec());
    let mut meta = Metadata::new("reproduce");
    meta.push("figure", &figure).push("seed", r.seed).push("d", r.d);
    let mut body = Vec::new();

    match figure.as_str() {
        "erg-trajectories" => {
            let horizon = a.horizon.unwrap_or(DEFAULT_HORIZON);
            let levels = a.levels.unwrap_or(DEFAULT_LEVELS);
            if levels == 0 || levels > DEFAULT_DEPTH {
                return Err(CliError::usage(format!("--levels must lie in 1..={DEFAULT_DEPTH}")));
            }
            meta.push("lambda", r.lambda).push("horizon", horizon);
            write!(body, "source,N,t")?;
            for i in 1..=levels {
                write!(body, ",q{i}")?;
            }
            writeln!(body)?;
            let mut ode_cfg = OdeConfig::new(r.lambda, horizon);
            ode_cfg.sample_interval = DEFAULT_SAMPLE_INTERVAL;
            let traj = integrate_ode(jsqd_drift(r.d as u32), &vec![0.0; DEFAULT_DEPTH], &ode_cfg)?;
            for (t, q) in traj.times.iter().zip(&traj.states) {
                write_row(&mut body, &format!("ode,,{t}"), &q[..levels])?;
            }
            for n in sizes(&TRAJECTORY_SIZES) {
                let graph = ERRG_LN2.spec(n, r.seed).build()?;
                let mut cfg = SimConfig::new(r.d, r.lambda, horizon, r.seed);
                cfg.depth = levels;
                cfg.allow_disconnected = true;
                let rec = simulate(&graph, &cfg)?;
                for (t, q) in rec.sample_times.iter().zip(&rec.occupancy) {
                    write_row(&mut body, &format!("{},{n},{t}", ERRG_LN2.name()), q)?;
                }
            }
        }
        "degree-sweep" => {
            let c = a.constant_degree.unwrap_or(DEFAULT_CONSTANT_DEGREE);
            meta.push("lambda", r.lambda)
                .push("fixed_point_mean_qlen", fixed_point_mean(r.lambda, r.d)?);
            writeln!(body, "family,N,mean_qlen,stderr")?;
            let families = [
                GraphFamily::Inhomogeneous(DegreeScaling::Constant(c)),
                GraphFamily::Inhomogeneous(DegreeScaling::Log),
                ERRG_LN2,
            ];
            for family in &families {
                for n in sizes(&SWEEP_SIZES) {
                    let s = r.steady(family, n, r.lambda, ServiceDistribution::Exponential)?;
                    writeln!(body, "{},{n},{},{}", family.name(), s.mean_qlen, s.mean_qlen_stderr)?;
                }
            }
        }
        "lambda-sweep" => {
            writeln!(body, "lambda,N,mean_qlen,stderr,fixed_point,gap")?;
            for &lambda in a.lambdas.as_deref().unwrap_or(&DEFAULT_LAMBDAS) {
                let target = fixed_point_mean(lambda, r.d)?;
                for n in sizes(&SWEEP_SIZES) {
                    let s = r.steady(&ERRG_LN2, n, lambda, ServiceDistribution::Exponential)?;
                    writeln!(
                        body,
                        "{lambda},{n},{},{},{target},{}",
                        s.mean_qlen,
                        s.mean_qlen_stderr,
                        s.mean_qlen - target
                    )?;
                }
            }
        }
        "service-sweep" => {
            meta.push("lambda", r.lambda);
            let names = a
                .services
                .clone()
                .unwrap_or_else(|| vec!["exponential".into(), "deterministic".into(), "pareto".into()]);
            writeln!(body, "service,family,N,mean_qlen,stderr")?;
            for name in &names {
                let svc = service(Some(name))?;
                for family in [GraphFamily::Complete, ERRG_LN2] {
                    for n in sizes(&SERVICE_SIZES) {
                        let s = r.steady(&family, n, r.lambda, svc)?;
                        writeln!(
                            body,
                            "{},{},{n},{},{}",
                            svc.name(),
                            family.name(),
                            s.mean_qlen,
                            s.mean_qlen_stderr
                        )?;
                    }
                }
            }
        }
        "geometric-vs-errg" => {
            let target = fixed_point_mean(r.lambda, r.d)?;
            meta.push("lambda", r.lambda);
            writeln!(body, "family,N,mean_qlen,stderr,fixed_point")?;
            for family in [ERRG_LN2, GraphFamily::Geometric(DegreeScaling::LogSquared)] {
                for n in sizes(&SWEEP_SIZES) {
                    let s = r.steady(&family, n, r.lambda, ServiceDistribution::Exponential)?;
                    writeln!(body, "{},{n},{},{},{target}", family.name(), s.mean_qlen, s.mean_qlen_stderr)?;
                }
            }
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown figure {other:?}; expected one of {}",
                FIGURES.join(", ")
            )))
        }
    }
    meta.config(&a);
    emit(a.out.as_deref(), &meta, &body)
}

fn write_row(body: &mut Vec<u8>, prefix: &str, q: &[f64]) -> std::io::Result<()> {
    write!(body, "{prefix}")?;
    for v in q {
        write!(body, ",{v}")?;
    }
    writeln!(body)
}
