use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::pointset::PointSet;
use crate::Rational;

use super::{FiniteMetricSpace, FiniteRelation};

pub const DEFAULT_HYPERSPACE_CAP: usize = 12;

/// Hausdorff distance between two nonempty subsets of a finite metric space.
pub fn hausdorff_distance(space: &FiniteMetricSpace, a: &PointSet, b: &PointSet) -> Rational {
    let directed = |from: &PointSet, to: &PointSet| {
        from.iter()
            .map(|x| to.iter().map(|y| space.dist(x, y)).min().expect("nonempty"))
            .max()
            .expect("nonempty")
    };
    directed(a, b).max(directed(b, a))
}

/// The lift `φ*(A) = ⋃_{x ∈ A} φ(x)` on nonempty subsets with the Hausdorff metric.
#[derive(Debug, Clone)]
pub struct Hyperspace {
    /// State `s` is the subset `subsets[s]`; states are ordered by bit mask.
    pub subsets: Vec<PointSet>,
    /// `image[s]` is the state of `φ*(subsets[s])`.
    pub image: Vec<usize>,
    /// `φ*` as a singleton-valued relation on `(subsets, d_H)`.
    pub relation: FiniteRelation,
}

impl Hyperspace {
    pub fn lift(phi: &FiniteRelation, cap: usize) -> Result<Self> {
        let n = phi.len();
        if n > cap || n >= 63 {
            return Err(Error::CapExceeded {
                what: format!("hyperspace of {n} points"),
                limit: cap,
            });
        }
        let subsets: Vec<PointSet> = (1u64..1 << n).map(|m| PointSet::from_mask(n, m)).collect();
        let index: HashMap<&PointSet, usize> = subsets.iter().enumerate().map(|(i, s)| (s, i)).collect();
        let image: Vec<usize> = subsets
            .iter()
            .map(|a| {
                let img = a
                    .iter()
                    .fold(PointSet::empty(n), |acc, x| acc.union(phi.image(x)));
                index[&img]
            })
            .collect();
        let space = phi.space();
        let dist: Vec<Vec<Rational>> = subsets
            .iter()
            .map(|a| subsets.iter().map(|b| hausdorff_distance(space, a, b)).collect())
            .collect();
        let hspace = Arc::new(FiniteMetricSpace::from_trusted(dist));
        let relation = FiniteRelation::from_function(hspace, &image)?;
        Ok(Hyperspace {
            subsets,
            image,
            relation,
        })
    }

    pub fn state_of(&self, set: &PointSet) -> Option<usize> {
        self.subsets.iter().position(|s| s == set)
    }
}
