//! Carriers: a compact space together with a multivalued self-map.
//!
//! Two realizations are provided. [`FiniteRelation`] is a finite metric space
//! with a relation; [`PlMultiMap`] is a piecewise-linear multivalued map of
//! `[0, 1]` with exact rational breakpoints. Everything downstream (partition,
//! cover and measure machinery) is generic over the [`Carrier`] trait.

mod finite;
mod hyperspace;
mod pl;

use std::fmt::{Debug, Display};
use std::hash::Hash;

use fixedbitset::FixedBitSet;

use crate::interval::IntervalSet;
use crate::pointset::PointSet;

pub use finite::{FiniteMetricSpace, FiniteRelation};
pub use hyperspace::{hausdorff_distance, Hyperspace, DEFAULT_HYPERSPACE_CAP};
pub use pl::{Cmp, PlBranch, PlFunction, PlMultiMap, Regularity, RegularityReport};

/// Boolean set operations shared by the subsets of every carrier.
pub trait SetAlgebra: Clone + Eq + Hash + Debug + Display {
    fn union(&self, other: &Self) -> Self;
    fn intersect(&self, other: &Self) -> Self;
    fn difference(&self, other: &Self) -> Self;
    fn is_empty(&self) -> bool;

    fn is_subset(&self, other: &Self) -> bool {
        self.difference(other).is_empty()
    }
}

impl SetAlgebra for IntervalSet {
    fn union(&self, other: &Self) -> Self {
        IntervalSet::union(self, other)
    }
    fn intersect(&self, other: &Self) -> Self {
        IntervalSet::intersect(self, other)
    }
    fn difference(&self, other: &Self) -> Self {
        IntervalSet::difference(self, other)
    }
    fn is_empty(&self) -> bool {
        IntervalSet::is_empty(self)
    }
    fn is_subset(&self, other: &Self) -> bool {
        IntervalSet::is_subset(self, other)
    }
}

impl SetAlgebra for PointSet {
    fn union(&self, other: &Self) -> Self {
        PointSet::union(self, other)
    }
    fn intersect(&self, other: &Self) -> Self {
        PointSet::intersect(self, other)
    }
    fn difference(&self, other: &Self) -> Self {
        PointSet::difference(self, other)
    }
    fn is_empty(&self) -> bool {
        PointSet::is_empty(self)
    }
    fn is_subset(&self, other: &Self) -> bool {
        PointSet::is_subset(self, other)
    }
}

/// A decomposition of the carrier into finitely many atoms such that each of
/// a given list of sets is a union of atoms.
#[derive(Debug, Clone)]
pub struct Atoms {
    pub count: usize,
    /// For each input set, the atoms it contains.
    pub incidence: Vec<FixedBitSet>,
}

/// A compact space `X` with a multivalued map `φ: X ⊸ X` with nonempty values.
pub trait Carrier {
    type Set: SetAlgebra;

    fn universe(&self) -> Self::Set;

    fn empty_set(&self) -> Self::Set;

    /// `φ⁻¹₊(B) = {x : φ(x) ∩ B ≠ ∅}`.
    fn large_preimage(&self, b: &Self::Set) -> Self::Set;

    /// `φ⁻¹₋(B) = {x : φ(x) ⊂ B}`.
    fn small_preimage(&self, b: &Self::Set) -> Self::Set;

    /// `k`-fold large preimage; `k = 0` returns `b`.
    fn iterated_large_preimage(&self, b: &Self::Set, k: usize) -> Self::Set {
        let mut cur = b.clone();
        for _ in 0..k {
            if cur.is_empty() {
                break;
            }
            cur = self.large_preimage(&cur);
        }
        cur
    }

    fn complement(&self, s: &Self::Set) -> Self::Set {
        self.universe().difference(s)
    }

    /// Openness in the carrier topology.
    fn is_open(&self, s: &Self::Set) -> bool;

    fn atomize(&self, sets: &[Self::Set]) -> Atoms;
}
