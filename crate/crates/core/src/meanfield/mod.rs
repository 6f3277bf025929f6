//! Mean-field limit of the occupancy process.
//!
//! The truncated system tracks `q_1..q_I` with `q_0 = 1` and `q_{I+1} = 0`:
//!
//! ```text
//! dq_i/dt = lambda * p_{i-1}(x(q)) - (q_i - q_{i+1}),   x_j = q_j - q_{j+1}
//! ```
//!
//! which for JSQ(d) reads `lambda (q_{i-1}^d - q_i^d) - (q_i - q_{i+1})`.
//!
//! The fixed point is obtained from the stationarity recursion
//! `q_i = lambda * q_{i-1}^d`, i.e. `q_i = lambda^{(d^i - 1)/(d - 1)}`. The
//! closed form sometimes quoted with exponent `(d^i - d)/(d - 1)` gives
//! `q_1 = 1`, which is not stationary (flow balance at level 1 forces
//! `q_1 = lambda`), so it is not used here.

mod ode;
mod stability;

pub use ode::{integrate_ode, jsqd_drift, Drift, MeanFieldTrajectory, OdeConfig, CLAMP_LIMIT};
pub use stability::{
    master_inequality_violation, psi_series, stability_weights, DecayRate, PsiSeries, StabilityWeights, PSI_FLOOR,
};

use thiserror::Error;

use crate::policy::OccupancyVector;

#[derive(Debug, Error)]
pub enum MeanFieldError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("step rejected at t = {t}: monotonicity clamp {clamp:e} after {halvings} halvings")]
    StepRejected { t: f64, clamp: f64, halvings: u32 },
    #[error("no feasible slack delta >= 2^-40 for lambda = {lambda}")]
    SearchExhausted { lambda: f64 },
}

pub(crate) fn check_lambda(lambda: f64) -> Result<(), MeanFieldError> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(MeanFieldError::InvalidParameter(format!("lambda must lie in (0, 1), got {lambda}")))
    }
}

/// Fixed point `q_1..q_depth` from `q_i = lambda * q_{i-1}^d`, `q_0 = 1`.
pub fn fixed_point(lambda: f64, d: u32, depth: usize) -> Result<OccupancyVector, MeanFieldError> {
    check_lambda(lambda)?;
    if d == 0 {
        return Err(MeanFieldError::InvalidParameter("d must be >= 1".into()));
    }
    let mut q = Vec::with_capacity(depth);
    let mut prev = 1.0f64;
    for _ in 0..depth {
        prev = lambda * prev.powi(d as i32);
        q.push(prev);
    }
    Ok(OccupancyVector::from_vec_unchecked(q))
}

/// Smallest truncation with fixed-point `q_I < 1e-14`, at least 10.
pub fn default_depth(lambda: f64, d: u32) -> Result<usize, MeanFieldError> {
    check_lambda(lambda)?;
    let mut prev = 1.0f64;
    for i in 1..=100_000usize {
        prev = lambda * prev.powi(d as i32);
        if prev < 1e-14 {
            return Ok(i.max(10));
        }
    }
    Err(MeanFieldError::InvalidParameter(format!("fixed point of lambda = {lambda} decays too slowly")))
}

/// Right-hand side of the JSQ(d) ODE at every level of `q` (untruncated:
/// `q_{I+1}` is taken from `next`).
pub fn jsqd_residual(lambda: f64, d: u32, q: &[f64], next: f64) -> Vec<f64> {
    let d = d as i32;
    (0..q.len())
        .map(|i| {
            let prev = if i == 0 { 1.0 } else { q[i - 1] };
            let after = q.get(i + 1).copied().unwrap_or(next);
            lambda * (prev.powi(d) - q[i].powi(d)) - (q[i] - after)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fixed_point_lambda_08_d2() {
        let q = fixed_point(0.8, 2, 6).unwrap();
        let expected = [0.8, 0.512, 0.2097152, 0.035184372088832, 0.000990352031428, 7.846377e-7];
        for (a, b) in q.levels().iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let mean: f64 = fixed_point(0.8, 2, 30).unwrap().mean_queue_length();
        assert_abs_diff_eq!(mean, 1.5579, epsilon = 1e-4);
    }

    #[test]
    fn fixed_point_closed_form() {
        // q_i = lambda^{(d^i - 1)/(d - 1)} for d >= 2.
        for &(lambda, d) in &[(0.5, 2u32), (0.8, 3), (0.9, 2)] {
            let q = fixed_point(lambda, d, 5).unwrap();
            for i in 1..=5u32 {
                let exp = (f64::from(d).powi(i as i32) - 1.0) / (f64::from(d) - 1.0);
                assert_abs_diff_eq!(q.get(i as usize), lambda.powf(exp), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn fixed_point_d1_is_geometric() {
        let q = fixed_point(0.6, 1, 12).unwrap();
        for i in 1..=12 {
            assert_abs_diff_eq!(q.get(i), 0.6f64.powi(i as i32), epsilon = 1e-15);
        }
    }

    #[test]
    fn fixed_point_is_stationary() {
        for &(lambda, d) in &[(0.8, 2u32), (0.5, 2), (0.95, 3), (0.3, 1)] {
            let depth = 20;
            let q = fixed_point(lambda, d, depth + 1).unwrap();
            let levels = &q.levels()[..depth];
            let residual = jsqd_residual(lambda, d, levels, q.get(depth + 1));
            assert!(residual.iter().all(|r| r.abs() <= 1e-12), "{residual:?}");
        }
    }

    #[test]
    fn default_depths() {
        assert_eq!(default_depth(0.8, 2).unwrap(), 10);
        assert!(default_depth(0.8, 1).unwrap() > 100);
        assert!(default_depth(1.0, 2).is_err());
        assert!(fixed_point(0.0, 2, 3).is_err());
    }
}
