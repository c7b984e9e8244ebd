//! Entropies of multivalued maps, computed exactly where possible.
//!
//! The crate works on two kinds of carrier: finite metric spaces with a
//! relation ([`FiniteRelation`]) and piecewise-linear multivalued maps of the
//! unit interval ([`PlMultiMap`]) whose sets are exact finite unions of
//! rational intervals ([`IntervalSet`]). On top of those it provides
//!
//! * partition (metric) entropy along the disjointified refinement sequence,
//! * cover entropy `h₊` with an exact minimum-subcover solver,
//! * orbit-space entropies `h_KT` and `h_CM` with exact separated/spanning counts,
//! * invariant-measure checks (brute force and max-flow) and the strong
//!   invariance condition on pairs of sets,
//! * continuous selections and level-wise comparison reports,
//! * a JSON scenario runner and seeded property suites.

pub mod carrier;
pub mod cover;
pub mod error;
pub mod estimate;
pub mod interval;
pub mod invariance;
pub mod measure;
pub mod orbit;
pub mod partition;
pub mod pointset;
pub mod preimage;
pub mod presets;
pub mod scenario;
pub mod selection;
pub mod solver;
pub mod suite;

pub use carrier::{Carrier, FiniteMetricSpace, FiniteRelation, PlBranch, PlFunction, PlMultiMap, SetAlgebra};
pub use error::{Error, Result};
pub use estimate::EntropyEstimate;
pub use interval::{Boundary, Interval, IntervalSet};
pub use pointset::PointSet;

/// Exact rational numbers used for endpoints, distances and measures.
pub type Rational = num_rational::Ratio<i128>;

/// Shorthand for `Rational::new(n, d)`.
pub fn rat(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}
