use flexsim_core::meanfield::{fixed_point, integrate_ode, jsqd_drift, OdeConfig};
use flexsim_core::simulator::{DEFAULT_DEPTH, DEFAULT_SAMPLE_INTERVAL};

use super::{DEFAULT_D, DEFAULT_HORIZON, DEFAULT_LAMBDA};
use crate::args::OdeArgs;
use crate::config::{emit, resolve, Metadata};
use crate::error::{CliError, Result};

const DEFAULT_STEP: f64 = 0.01;

fn initial_state(start: &str, lambda: f64, d: u32, depth: usize) -> Result<Vec<f64>> {
    match start {
        "empty" => Ok(vec![0.0; depth]),
        "fixed-point" => Ok(fixed_point(lambda, d, depth)?.levels().to_vec()),
        list => {
            let mut q = list
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| CliError::usage(format!("--start {list:?}: {e}")))?;
            if q.len() > depth {
                return Err(CliError::usage(format!("--start has {} levels, depth is {depth}", q.len())));
            }
            q.resize(depth, 0.0);
            Ok(q)
        }
    }
}

pub fn ode(args: OdeArgs) -> Result<()> {
    let a = resolve(args.clone(), args.config.as_deref())?;
    let lambda = a.lambda.unwrap_or(DEFAULT_LAMBDA);
    let d = u32::try_from(a.d.unwrap_or(DEFAULT_D)).map_err(|_| CliError::usage("--d is too large"))?;
    let depth = a.depth.unwrap_or(DEFAULT_DEPTH);
    let mut cfg = OdeConfig::new(lambda, a.horizon.unwrap_or(DEFAULT_HORIZON));
    cfg.step = a.step.unwrap_or(DEFAULT_STEP);
    cfg.sample_interval = a.sample_interval.unwrap_or(DEFAULT_SAMPLE_INTERVAL);
    let start = a.start.clone().unwrap_or_else(|| "empty".into());
    let q0 = initial_state(&start, lambda, d, depth)?;

    let traj = integrate_ode(jsqd_drift(d), &q0, &cfg)?;
    let q_star = fixed_point(lambda, d, depth)?;
    let gap = traj
        .last()
        .iter()
        .zip(q_star.levels())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let mut meta = Metadata::new("ode");
    meta.push("lambda", lambda)
        .push("d", d)
        .push("depth", depth)
        .push("start", &start)
        .config(&a)
        .push("halvings", traj.halvings)
        .push("final_gap_to_fixed_point", gap);
    let mut body = Vec::new();
    traj.write_csv(&mut body)?;
    emit(a.out.as_deref(), &meta, &body)
}
