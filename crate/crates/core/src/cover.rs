//! Open covers, their pullbacks and joins, exact minimal subcovers, and the
//! cover entropy `h₊`.

use std::collections::HashSet;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::carrier::{Carrier, FiniteMetricSpace, FiniteRelation, SetAlgebra};
use crate::error::{Error, Result};
use crate::estimate::{self, growth_rate, EntropyEstimate};
use crate::interval::IntervalSet;
use crate::pointset::PointSet;
use crate::solver::{minimum_cover, CoverSolution, SolverConfig};
use crate::Rational;

/// Open sets whose union is the whole carrier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover<S> {
    members: Vec<S>,
}

impl<S: SetAlgebra> Cover<S> {
    /// Checks that `members` cover `carrier` and are open in it.
    pub fn new<C: Carrier<Set = S>>(carrier: &C, members: Vec<S>) -> Result<Self> {
        let universe = carrier.universe();
        let union = members.iter().fold(carrier.empty_set(), |u, m| u.union(m));
        if union != universe {
            return Err(Error::NotACover(universe.difference(&union).to_string()));
        }
        if let Some((member, set)) = members.iter().enumerate().find(|(_, m)| !carrier.is_open(m)) {
            return Err(Error::NotOpen {
                member,
                set: set.to_string(),
            });
        }
        Ok(Cover { members })
    }

    pub fn members(&self) -> &[S] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Every member of `self` lies inside some member of `coarser`.
    pub fn refines(&self, coarser: &Cover<S>) -> bool {
        self.members
            .iter()
            .all(|m| coarser.members.iter().any(|c| m.is_subset(c)))
    }
}

/// `φ⁻ʲ₊(A)` member by member. A member that fails to be open is reported as
/// [`Error::NotOpen`]; this happens for maps that are not lower semicontinuous.
pub fn pullback_cover<C: Carrier>(phi: &C, a: &Cover<C::Set>, j: usize) -> Result<Cover<C::Set>> {
    let members = a
        .members
        .iter()
        .map(|m| phi.iterated_large_preimage(m, j))
        .collect();
    Cover::new(phi, members)
}

/// All nonempty intersections `A₀ ∩ … ∩ A_{k−1}`, first occurrences kept.
pub fn cover_join<S: SetAlgebra>(covers: &[Cover<S>]) -> Cover<S> {
    let mut acc: Vec<S> = match covers.first() {
        Some(c) => dedup(c.members.clone()),
        None => return Cover { members: Vec::new() },
    };
    for c in &covers[1..] {
        let next = acc
            .iter()
            .flat_map(|x| c.members.iter().map(move |y| x.intersect(y)))
            .filter(|s| !s.is_empty())
            .collect();
        acc = dedup(next);
    }
    Cover { members: acc }
}

fn dedup<S: SetAlgebra>(sets: Vec<S>) -> Vec<S> {
    let mut seen = HashSet::new();
    sets.into_iter().filter(|s| seen.insert(s.clone())).collect()
}

/// `N(A)`: the fewest members of `a` that still cover the carrier.
pub fn minimal_subcover<C: Carrier>(carrier: &C, a: &Cover<C::Set>, cfg: &SolverConfig) -> Result<CoverSolution> {
    let atoms = carrier.atomize(&a.members);
    minimum_cover(atoms.count, &atoms.incidence, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverRow {
    pub n: usize,
    /// Distinct members of `A ∨ φ⁻¹₊(A) ∨ … ∨ φ⁻⁽ⁿ⁻¹⁾₊(A)`.
    pub join_size: usize,
    pub min_subcover: usize,
    pub exact: bool,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverEntropy {
    pub rows: Vec<CoverRow>,
    pub estimate: EntropyEstimate,
}

impl CoverEntropy {
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.join_size.to_string(),
                    r.min_subcover.to_string(),
                    r.rate.to_string(),
                    r.exact.to_string(),
                ]
            })
            .collect();
        estimate::to_csv(&["n", "join_size", "min_subcover", "rate", "exact"], &rows)
    }
}

/// `(1/n) log N(⋁_{j<n} φ⁻ʲ₊(A))` for `n = 1..=depth`.
pub fn h_plus_estimate<C: Carrier>(phi: &C, a: &Cover<C::Set>, depth: usize, cfg: &SolverConfig) -> Result<CoverEntropy> {
    if depth == 0 {
        return Err(Error::Domain("depth must be at least 1".into()));
    }
    let mut joined = cover_join(std::slice::from_ref(a));
    let mut rows = Vec::with_capacity(depth);
    for n in 1..=depth {
        if n > 1 {
            let pulled = pullback_cover(phi, a, n - 1)?;
            joined = cover_join(&[joined, pulled]);
        }
        let sol = minimal_subcover(phi, &joined, cfg)?;
        rows.push(CoverRow {
            n,
            join_size: joined.len(),
            min_subcover: sol.size,
            exact: sol.exact,
            rate: growth_rate(sol.size, n),
        });
    }
    let estimate = EntropyEstimate::from_levels(
        rows.iter().map(|r| (r.rate, r.exact)).collect(),
        estimate::params([("depth", depth.to_string()), ("cover_size", a.len().to_string())]),
    );
    Ok(CoverEntropy { rows, estimate })
}

/// Open `ε`-balls around every point of a finite metric space.
pub fn ball_cover_finite(phi: &FiniteRelation, eps: &Rational) -> Result<Cover<PointSet>> {
    let space: &FiniteMetricSpace = phi.space();
    let n = space.len();
    let members = (0..n)
        .map(|x| PointSet::from_indices(n, (0..n).filter(|&y| space.dist(x, y) < *eps)))
        .collect();
    Cover::new(phi, members)
}

/// `(c − ε, c + ε) ∩ [0, 1]` for centers `c = 0, ε, 2ε, …` up to 1.
pub fn ball_cover_interval<C: Carrier<Set = IntervalSet>>(carrier: &C, eps: &Rational) -> Result<Cover<IntervalSet>> {
    if *eps <= Rational::zero() {
        return Err(Error::Domain("ball radius must be positive".into()));
    }
    let mut members = Vec::new();
    let mut c = Rational::zero();
    loop {
        let lo = (c - eps).max(Rational::zero());
        let hi = (c + eps).min(Rational::one());
        let ball = IntervalSet::open(lo, hi)?
            .union(&if lo.is_zero() { IntervalSet::point(lo)? } else { IntervalSet::empty() })
            .union(&if hi == Rational::one() { IntervalSet::point(hi)? } else { IntervalSet::empty() });
        members.push(ball);
        if c >= Rational::one() {
            break;
        }
        c = (c + eps).min(Rational::one());
    }
    Cover::new(carrier, members)
}

/// The finite form of the iterate inequality for one `(A, n, k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IterateRefinement {
    /// Every member of `⋁_{j<nk} φ⁻ʲ₊(A)` lies in a member of `⋁_{i<n} (φᵏ)⁻ⁱ₊(A)`.
    pub refines: bool,
    pub coarse_min: usize,
    pub fine_min: usize,
    pub exact: bool,
}

impl IterateRefinement {
    pub fn holds(&self) -> bool {
        self.refines && self.coarse_min <= self.fine_min
    }
}

pub fn iterate_refinement_check(
    phi: &FiniteRelation,
    a: &Cover<PointSet>,
    n: usize,
    k: usize,
    cfg: &SolverConfig,
) -> Result<IterateRefinement> {
    if n == 0 || k == 0 {
        return Err(Error::Domain("n and k must be at least 1".into()));
    }
    let power = phi.power(k);
    let coarse_parts = (0..n)
        .map(|i| pullback_cover(&power, a, i))
        .collect::<Result<Vec<_>>>()?;
    let fine_parts = (0..n * k)
        .map(|j| pullback_cover(phi, a, j))
        .collect::<Result<Vec<_>>>()?;
    let coarse = cover_join(&coarse_parts);
    let fine = cover_join(&fine_parts);
    let c = minimal_subcover(phi, &coarse, cfg)?;
    let f = minimal_subcover(phi, &fine, cfg)?;
    Ok(IterateRefinement {
        refines: fine.refines(&coarse),
        coarse_min: c.size,
        fine_min: f.size,
        exact: c.exact && f.exact,
    })
}
