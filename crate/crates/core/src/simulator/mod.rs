//! Event-driven simulation of JSQ(d) on a compatibility graph.
//!
//! Time is measured in mean service times. Arrivals form one Poisson stream of
//! rate `lambda * N`; each picks a dispatcher uniformly, samples
//! `min(d, |N_w|)` of its servers without replacement and joins the shortest
//! (ties broken uniformly).

mod analysis;
mod coupled;
mod engine;
mod state;
mod steady;

pub use analysis::{lyapunov_direct, lyapunov_series, tail_moment_check, tail_prefactor};
pub use coupled::{coupled_simulate, CoupledConfig, CoupledTrajectory};
pub use engine::{simulate, ArrivalTrace, Sampler, SimConfig, Simulation, TrajectoryRecord};
pub use state::SystemState;
pub use steady::{steady_state, steady_state_on, ReplicaEstimate, SteadyConfig, SteadySummary};

use rand::Rng;
use rand_distr::{Distribution, Exp1, Pareto};
use thiserror::Error;

use crate::graph::BipartiteGraph;

/// Recording depth used when none is given.
pub const DEFAULT_DEPTH: usize = 30;
pub const DEFAULT_SAMPLE_INTERVAL: f64 = 0.1;
/// Events between full recounts of the occupancy in debug builds.
pub const DEBUG_VERIFY_EVERY: u64 = 10_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("graph is disconnected ({0} components); pass the override to simulate anyway")]
    Disconnected(usize),
    #[error("invariant violated after event {event}: {detail}")]
    Invariant { event: u64, detail: String },
    #[error("coupling margin {margin} < 0 after event {event} (t = {time})")]
    MarginViolation { event: u64, time: f64, margin: i64 },
}

/// Unit-mean service time law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServiceDistribution {
    Exponential,
    Deterministic,
    /// Pareto with the given shape; scale `(shape - 1) / shape` gives mean 1.
    Pareto { shape: f64 },
}

impl ServiceDistribution {
    /// Power law with exponent 3 (scale 2/3).
    pub const PARETO3: ServiceDistribution = ServiceDistribution::Pareto { shape: 3.0 };

    pub fn name(&self) -> &'static str {
        match self {
            ServiceDistribution::Exponential => "exponential",
            ServiceDistribution::Deterministic => "deterministic",
            ServiceDistribution::Pareto { .. } => "pareto",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "exponential" | "exp" => Some(ServiceDistribution::Exponential),
            "deterministic" | "det" => Some(ServiceDistribution::Deterministic),
            "pareto" => Some(ServiceDistribution::PARETO3),
            _ => None,
        }
    }

    pub fn mean(&self) -> f64 {
        1.0
    }

    pub(crate) fn validate(&self) -> Result<(), SimError> {
        match *self {
            ServiceDistribution::Pareto { shape } if !(shape > 1.0) => Err(SimError::InvalidParameter(format!(
                "pareto shape must exceed 1 for a finite mean, got {shape}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ServiceDistribution::Exponential => Exp1.sample(rng),
            ServiceDistribution::Deterministic => 1.0,
            ServiceDistribution::Pareto { shape } => Pareto::new((shape - 1.0) / shape, shape)
                .expect("validated shape")
                .sample(rng),
        }
    }
}

pub(crate) fn check_common(
    graph: &BipartiteGraph,
    lambda: f64,
    d: usize,
    allow_disconnected: bool,
    allow_unstable: bool,
) -> Result<(), SimError> {
    if !(lambda > 0.0) || (lambda >= 1.0 && !allow_unstable) || !lambda.is_finite() {
        return Err(SimError::InvalidParameter(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    if d == 0 {
        return Err(SimError::InvalidParameter("d must be >= 1".into()));
    }
    if !allow_disconnected {
        let components = graph.component_count();
        if components != 1 {
            return Err(SimError::Disconnected(components));
        }
    }
    Ok(())
}
