//! Large and small preimages on both carriers.
//!
//! On the interval carrier each branch is inverted piece by piece: for a piece
//! `J` of the target set, the points whose value interval `[l(x), u(x)]` meets
//! (or lies inside) `J` are cut out by exact level sets of the envelopes, with
//! strict or non-strict inequalities following the open/closed flags of `J`.

use fixedbitset::FixedBitSet;

use crate::carrier::{Atoms, Carrier, Cmp, FiniteRelation, PlMultiMap};
use crate::interval::IntervalSet;
use crate::pointset::PointSet;
use crate::Rational;

impl Carrier for FiniteRelation {
    type Set = PointSet;

    fn universe(&self) -> PointSet {
        PointSet::full(self.len())
    }

    fn empty_set(&self) -> PointSet {
        PointSet::empty(self.len())
    }

    fn large_preimage(&self, b: &PointSet) -> PointSet {
        b.iter()
            .fold(self.empty_set(), |acc, y| acc.union(self.preimage_of_point(y)))
    }

    fn small_preimage(&self, b: &PointSet) -> PointSet {
        PointSet::from_indices(
            self.len(),
            (0..self.len()).filter(|&x| self.image(x).is_subset(b)),
        )
    }

    fn is_open(&self, _: &PointSet) -> bool {
        true
    }

    fn atomize(&self, sets: &[PointSet]) -> Atoms {
        Atoms {
            count: self.len(),
            incidence: sets.iter().map(|s| s.bits().clone()).collect(),
        }
    }
}

fn upper_cmp(closed: bool) -> Cmp {
    if closed {
        Cmp::Le
    } else {
        Cmp::Lt
    }
}

fn lower_cmp(closed: bool) -> Cmp {
    if closed {
        Cmp::Ge
    } else {
        Cmp::Gt
    }
}

impl Carrier for PlMultiMap {
    type Set = IntervalSet;

    fn universe(&self) -> IntervalSet {
        IntervalSet::unit()
    }

    fn empty_set(&self) -> IntervalSet {
        IntervalSet::empty()
    }

    fn large_preimage(&self, b: &IntervalSet) -> IntervalSet {
        let mut out = IntervalSet::empty();
        for br in self.branches() {
            for j in b.pieces() {
                // [l, u] ∩ J ≠ ∅  ⇔  l ≤ sup J and u ≥ inf J (strict at open ends)
                let hit = br
                    .domain
                    .intersect(&br.lower.level_set(upper_cmp(j.hi.closed), &j.hi.value))
                    .intersect(&br.upper.level_set(lower_cmp(j.lo.closed), &j.lo.value));
                out = out.union(&hit);
            }
        }
        out
    }

    fn small_preimage(&self, b: &IntervalSet) -> IntervalSet {
        let mut out = IntervalSet::unit();
        for br in self.branches() {
            // [l, u] is connected, so it lies in B iff it lies in one piece of B
            let mut inside = br.domain.complement();
            for j in b.pieces() {
                let fits = br
                    .lower
                    .level_set(lower_cmp(j.lo.closed), &j.lo.value)
                    .intersect(&br.upper.level_set(upper_cmp(j.hi.closed), &j.hi.value));
                inside = inside.union(&fits);
            }
            out = out.intersect(&inside);
        }
        out
    }

    fn is_open(&self, s: &IntervalSet) -> bool {
        s.is_relatively_open()
    }

    fn atomize(&self, sets: &[IntervalSet]) -> Atoms {
        let mut pts: Vec<Rational> = sets.iter().flat_map(|s| s.endpoints()).collect();
        pts.push(Rational::from_integer(0));
        pts.push(Rational::from_integer(1));
        pts.sort();
        pts.dedup();
        // atoms: each point, then each open gap (represented by its midpoint)
        let two = Rational::from_integer(2);
        let mut probes = Vec::with_capacity(2 * pts.len());
        for (i, p) in pts.iter().enumerate() {
            probes.push(*p);
            if let Some(q) = pts.get(i + 1) {
                probes.push((p + q) / two);
            }
        }
        let incidence = sets
            .iter()
            .map(|s| {
                let mut bits = FixedBitSet::with_capacity(probes.len());
                for (k, x) in probes.iter().enumerate() {
                    if s.contains(x) {
                        bits.insert(k);
                    }
                }
                bits
            })
            .collect();
        Atoms {
            count: probes.len(),
            incidence,
        }
    }
}
