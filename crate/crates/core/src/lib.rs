//! Load balancing under task-server compatibility constraints.
//!
//! - [`graph`]: bipartite compatibility graphs and random constructions.
//! - [`policy`]: assignment probability functions, JSQ(d) in particular.
//! - [`properties`]: proportional sparsity and subcriticality checkers.
//! - [`simulator`]: event-driven simulation, steady-state estimation and the
//!   coupled constrained/fully-flexible run.
//! - [`meanfield`]: mean-field ODE, fixed point and global-stability weights.

pub mod graph;
pub mod sampling;
pub mod policy;
pub mod properties;
pub mod meanfield;
pub mod simulator;
