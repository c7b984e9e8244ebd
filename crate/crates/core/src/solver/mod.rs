//! Exact combinatorial solvers behind the entropy counts.
//!
//! Minimum set cover gives `N(·)` for covers and spanning numbers; maximum
//! independent set gives separated numbers. Both are branch-and-bound searches
//! with a node budget; answers carry an `exact` flag that is false only when
//! the instance exceeded the size threshold or the budget ran out.

mod mis;
mod setcover;

pub use mis::{maximum_independent_set, IndependentSet};
pub use setcover::{minimum_cover, CoverSolution};

use serde::{Deserialize, Serialize};

/// Limits for the exact searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Largest instance (vertices, or candidate sets after reduction) searched exactly.
    pub exact_threshold: usize,
    /// Search nodes allowed per instance before falling back to the incumbent.
    pub node_budget: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            exact_threshold: 2000,
            node_budget: 5_000_000,
        }
    }
}
