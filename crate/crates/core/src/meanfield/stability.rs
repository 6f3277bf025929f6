use super::{check_lambda, fixed_point, MeanFieldError, MeanFieldTrajectory};

/// Samples with `Psi` at or below this are left out of the rate fit.
pub const PSI_FLOOR: f64 = 1e-10;
const MASTER_SLACK: f64 = 1e-12;

/// Weights `omega_0..omega_depth` for the distance `Psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityWeights {
    pub omega: Vec<f64>,
    pub r: f64,
    pub i0: usize,
    pub delta: f64,
    pub lambda: f64,
    /// Fixed point `q_1..q_depth` the weights were built against.
    pub q_star: Vec<f64>,
}

impl StabilityWeights {
    pub fn depth(&self) -> usize {
        self.omega.len() - 1
    }
}

/// `r(delta)`, the smaller root of `r^2 - b r + 2/(1+lambda)`, if real.
fn ratio(lambda: f64, delta: f64) -> Option<f64> {
    let b = 1.0 + (2.0 - 2.0 * delta) / (1.0 + lambda);
    let disc = b * b - 8.0 / (1.0 + lambda);
    (disc >= 0.0).then(|| 0.5 * (b - disc.sqrt()))
}

fn damping(lambda: f64, q: f64) -> f64 {
    lambda * (2.0 * q + 1.0)
}

/// Largest `omega_{i+1} - rhs` over `1 <= i < depth`, scaled by
/// `max(1, omega_{i+1})`; nonpositive means the weights are admissible.
pub fn master_inequality_violation(w: &StabilityWeights) -> f64 {
    let omega = &w.omega;
    (1..w.depth())
        .map(|i| {
            let q = w.q_star.get(i - 1).copied().unwrap_or(0.0);
            let rhs = omega[i] + (omega[i] * (1.0 - w.delta) - omega[i - 1]) / damping(w.lambda, q);
            (omega[i + 1] - rhs) / omega[i + 1].max(1.0)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Builds weights by trying `delta = 2^-k`, `k = 1..=40`, and keeping the
/// first (largest) feasible one.
pub fn stability_weights(lambda: f64, d: u32, depth: usize) -> Result<StabilityWeights, MeanFieldError> {
    check_lambda(lambda)?;
    let q_star = fixed_point(lambda, d, depth.max(1))?.levels().to_vec();
    let threshold = 0.5 * (1.0 + lambda);
    let i0 = (1..)
        .find(|&i| damping(lambda, q_star.get(i - 1).copied().unwrap_or(0.0)) < threshold)
        .expect("damping tends to lambda < (1+lambda)/2");
    if depth < i0 + 1 {
        return Err(MeanFieldError::InvalidParameter(format!(
            "depth {depth} must exceed the crossover index {i0}"
        )));
    }
    let r_max = 2.0 / (1.0 + lambda);

    for k in 1..=40 {
        let delta = 0.5f64.powi(k);
        let mut omega = vec![0.0, 1.0];
        for i in 1..i0 {
            omega.push(omega[i] + (omega[i] * (1.0 - delta) - omega[i - 1]) / 3.0);
        }
        if omega.windows(2).any(|p| p[1] <= p[0]) {
            continue;
        }
        let Some(r) = ratio(lambda, delta) else { continue };
        if !(r > 1.0 && r < r_max) {
            continue;
        }
        let q_i0 = q_star[i0 - 1];
        let big_r = 1.0 + (omega[i0] * (1.0 - delta) - omega[i0 - 1]) / (omega[i0] * damping(lambda, q_i0));
        if !(big_r > 1.0 && r <= big_r) {
            continue;
        }
        let base = omega[i0];
        omega.extend((1..=depth - i0).map(|j| base * r.powi(j as i32)));
        let weights = StabilityWeights {
            omega,
            r,
            i0,
            delta,
            lambda,
            q_star: q_star.clone(),
        };
        if master_inequality_violation(&weights) <= MASTER_SLACK {
            return Ok(weights);
        }
    }
    Err(MeanFieldError::SearchExhausted { lambda })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayRate {
    /// Least-squares slope of `ln Psi` against `t`.
    Slope(f64),
    /// Every sample was at or below the floor.
    Converged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsiSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub rate: DecayRate,
}

/// `Psi(t) = sum_i omega_i |q_i(t) - q_i^*|` per sample, over the common depth.
pub fn psi_series(traj: &MeanFieldTrajectory, weights: &StabilityWeights, q_star: &[f64]) -> PsiSeries {
    let depth = traj.depth().min(weights.depth()).min(q_star.len());
    let values: Vec<f64> = traj
        .states
        .iter()
        .map(|q| (0..depth).map(|i| weights.omega[i + 1] * (q[i] - q_star[i]).abs()).sum())
        .collect();
    let fit: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&values)
        .filter(|(_, &v)| v > PSI_FLOOR)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    let rate = if fit.is_empty() {
        DecayRate::Converged
    } else {
        DecayRate::Slope(slope(&fit))
    };
    PsiSeries {
        times: traj.times.clone(),
        values,
        rate,
    }
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}
