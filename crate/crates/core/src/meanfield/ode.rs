use std::io::Write;

use super::{check_lambda, MeanFieldError};
use crate::policy::AssignmentPolicy;

/// Largest monotonicity correction accepted per step.
pub const CLAMP_LIMIT: f64 = 1e-9;
const MAX_HALVINGS: u32 = 10;

/// Drift of the occupancy ODE.
#[derive(Clone, Copy)]
pub enum Drift<'a> {
    /// JSQ(d) in closed form.
    Jsqd(u32),
    /// Any policy, through its assignment probabilities.
    Policy(&'a dyn AssignmentPolicy),
}

pub fn jsqd_drift(d: u32) -> Drift<'static> {
    Drift::Jsqd(d)
}

impl Drift<'_> {
    fn eval(&self, lambda: f64, q: &[f64], out: &mut [f64], x: &mut Vec<f64>) {
        let depth = q.len();
        let level = |i: usize| match i {
            0 => 1.0,
            i if i <= depth => q[i - 1],
            _ => 0.0,
        };
        match *self {
            Drift::Jsqd(d) => {
                let d = d as i32;
                for i in 1..=depth {
                    out[i - 1] = lambda * (level(i - 1).powi(d) - level(i).powi(d)) - (level(i) - level(i + 1));
                }
            }
            Drift::Policy(policy) => {
                x.clear();
                x.extend((0..=depth).map(|j| level(j) - level(j + 1)));
                let p = policy.probabilities(x);
                for i in 1..=depth {
                    let arrive = p.get(i - 1).copied().unwrap_or(0.0);
                    out[i - 1] = lambda * arrive - (level(i) - level(i + 1));
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeConfig {
    pub lambda: f64,
    pub horizon: f64,
    pub step: f64,
    pub sample_interval: f64,
}

impl OdeConfig {
    pub fn new(lambda: f64, horizon: f64) -> Self {
        OdeConfig {
            lambda,
            horizon,
            step: 0.01,
            sample_interval: 0.1,
        }
    }
}

/// Sampled ODE solution; `states[k][i-1]` is `q_i` at `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Number of step halvings that were needed over the run.
    pub halvings: u32,
}

impl MeanFieldTrajectory {
    pub fn depth(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().map_or(&[], Vec::as_slice)
    }

    /// `t,q1..qK,overflow`; the closure makes overflow identically zero.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        write!(out, "t")?;
        for i in 1..=self.depth() {
            write!(out, ",q{i}")?;
        }
        writeln!(out, ",overflow")?;
        for (t, q) in self.times.iter().zip(&self.states) {
            write!(out, "{t}")?;
            for v in q {
                write!(out, ",{v}")?;
            }
            writeln!(out, ",0")?;
        }
        Ok(())
    }
}

struct Rk4<'a> {
    drift: Drift<'a>,
    lambda: f64,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
    x: Vec<f64>,
}

impl Rk4<'_> {
    /// One step from `q` into `next`; returns the clamp magnitude.
    fn step(&mut self, q: &[f64], h: f64, next: &mut Vec<f64>) -> f64 {
        let n = q.len();
        let [k1, k2, k3, k4] = &mut self.k;
        self.drift.eval(self.lambda, q, k1, &mut self.x);
        for i in 0..n {
            self.tmp[i] = q[i] + 0.5 * h * k1[i];
        }
        self.drift.eval(self.lambda, &self.tmp, k2, &mut self.x);
        for i in 0..n {
            self.tmp[i] = q[i] + 0.5 * h * k2[i];
        }
        self.drift.eval(self.lambda, &self.tmp, k3, &mut self.x);
        for i in 0..n {
            self.tmp[i] = q[i] + h * k3[i];
        }
        self.drift.eval(self.lambda, &self.tmp, k4, &mut self.x);
        next.clear();
        let mut clamp = 0.0f64;
        let mut prev = 1.0f64;
        for i in 0..n {
            let raw = q[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            let v = raw.clamp(0.0, prev);
            clamp = clamp.max((v - raw).abs());
            next.push(v);
            prev = v;
        }
        clamp
    }
}

/// Fixed-step RK4 from `q0` (levels `q_1..q_depth`) to `cfg.horizon`,
/// recording at multiples of `cfg.sample_interval` and at the horizon.
pub fn integrate_ode(drift: Drift<'_>, q0: &[f64], cfg: &OdeConfig) -> Result<MeanFieldTrajectory, MeanFieldError> {
    check_lambda(cfg.lambda)?;
    if !(cfg.horizon > 0.0 && cfg.step > 0.0 && cfg.sample_interval > 0.0) {
        return Err(MeanFieldError::InvalidParameter(
            "horizon, step and sample interval must be positive".into(),
        ));
    }
    if let Drift::Jsqd(0) = drift {
        return Err(MeanFieldError::InvalidParameter("d must be >= 1".into()));
    }
    let mut prev = 1.0;
    for (i, &v) in q0.iter().enumerate() {
        if !(0.0..=prev).contains(&v) {
            return Err(MeanFieldError::InvalidParameter(format!("q0 is not a valid occupancy at level {}", i + 1)));
        }
        prev = v;
    }

    let n = q0.len();
    let mut rk = Rk4 {
        drift,
        lambda: cfg.lambda,
        k: std::array::from_fn(|_| vec![0.0; n]),
        tmp: vec![0.0; n],
        x: Vec::with_capacity(n + 1),
    };
    let mut q = q0.to_vec();
    let mut next = Vec::with_capacity(n);
    let mut traj = MeanFieldTrajectory {
        times: vec![0.0],
        states: vec![q.clone()],
        halvings: 0,
    };

    let n_samples = (cfg.horizon / cfg.sample_interval + 1e-9).floor() as u64;
    let mut targets: Vec<f64> = (1..=n_samples).map(|k| k as f64 * cfg.sample_interval).collect();
    if targets.last().is_none_or(|&t| cfg.horizon - t > 1e-9 * cfg.horizon) {
        targets.push(cfg.horizon);
    } else if let Some(t) = targets.last_mut() {
        *t = cfg.horizon;
    }

    let mut t = 0.0;
    for target in targets {
        let gap = target - t;
        let mut substeps = (gap / cfg.step - 1e-9).ceil().max(1.0) as u64;
        let mut done = 0u64;
        let mut halvings = 0u32;
        while done < substeps {
            let h = gap / substeps as f64;
            let clamp = rk.step(&q, h, &mut next);
            if clamp > CLAMP_LIMIT {
                if halvings == MAX_HALVINGS {
                    return Err(MeanFieldError::StepRejected {
                        t: t + done as f64 * h,
                        clamp,
                        halvings,
                    });
                }
                halvings += 1;
                traj.halvings += 1;
                substeps *= 2;
                done *= 2;
                continue;
            }
            std::mem::swap(&mut q, &mut next);
            done += 1;
        }
        t = target;
        traj.times.push(t);
        traj.states.push(q.clone());
    }
    Ok(traj)
}
