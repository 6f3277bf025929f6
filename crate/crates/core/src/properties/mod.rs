//! Certification of compatibility graphs against proportional sparsity and
//! subcriticality.

mod flow;
mod sparsity;
mod subcritical;
mod trend;

pub use sparsity::{deficiency_of_subset, sparsity_deficiency, SparsityMode, SparsityReport, EXACT_MAX_SERVERS};
pub use subcritical::{
    optimal_subcriticality_load, subcriticality_report, uniform_subcriticality_metric, OptimalLoad,
    SubcriticalityReport, SubsetRule, UniformMetric, DEFAULT_ENUMERATION_CAP,
};
pub use trend::{
    sparsity_trend, summarize_trend, write_trend_csv, DegreeScaling, GraphFamily, TrendConfig, TrendRow,
    TREND_CSV_HEADER,
};

use thiserror::Error;

use crate::graph::GraphError;

#[derive(Debug, Error)]
pub enum PropertyError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{pairs} dispatcher/subset pairs exceed the enumeration cap {cap}; use the uniform metric")]
    EnumerationCap { pairs: u64, cap: u64 },
    #[error("exact sparsity enumeration needs N <= {max}, got {n_servers}")]
    ExactTooLarge { n_servers: usize, max: usize },
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
