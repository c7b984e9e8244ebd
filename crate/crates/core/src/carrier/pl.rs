use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{parse_rational, Interval, IntervalSet};
use crate::pointset::PointSet;
use crate::Rational;

use super::{FiniteMetricSpace, FiniteRelation};

/// A continuous piecewise-linear function `[0, 1] → [0, 1]` given by its knots.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlFunction {
    knots: Vec<(Rational, Rational)>,
}

/// Comparison used to cut level sets of a [`PlFunction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Cmp::Lt => lhs < rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Gt => lhs > rhs,
            Cmp::Ge => lhs >= rhs,
        }
    }
}

impl PlFunction {
    /// Knots must start at `x = 0`, end at `x = 1`, increase strictly in `x`,
    /// and take values in `[0, 1]`.
    pub fn new(knots: Vec<(Rational, Rational)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Domain("a PL function needs at least two knots".into()));
        }
        if !knots[0].0.is_zero() || !knots[knots.len() - 1].0.is_one() {
            return Err(Error::Domain("PL knots must span x = 0 to x = 1".into()));
        }
        for w in knots.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::Domain(format!("knot abscissae not increasing at {}", w[1].0)));
            }
        }
        if let Some((x, y)) = knots.iter().find(|(_, y)| y.is_negative() || *y > Rational::one()) {
            return Err(Error::Domain(format!("value {y} at {x} outside [0,1]")));
        }
        Ok(PlFunction { knots })
    }

    pub fn constant(c: Rational) -> Result<Self> {
        Self::new(vec![(Rational::zero(), c), (Rational::one(), c)])
    }

    /// `x ↦ slope·x + intercept`.
    pub fn affine(slope: Rational, intercept: Rational) -> Result<Self> {
        Self::new(vec![
            (Rational::zero(), intercept),
            (Rational::one(), slope + intercept),
        ])
    }

    pub fn identity() -> Self {
        Self::affine(Rational::one(), Rational::zero()).expect("identity is valid")
    }

    pub fn knots(&self) -> &[(Rational, Rational)] {
        &self.knots
    }

    pub fn knot_xs(&self) -> impl Iterator<Item = Rational> + '_ {
        self.knots.iter().map(|(x, _)| *x)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let i = self.knots.partition_point(|(kx, _)| kx <= x);
        if i == 0 {
            return self.knots[0].1;
        }
        if i == self.knots.len() {
            return self.knots[i - 1].1;
        }
        let (x0, y0) = self.knots[i - 1];
        let (x1, y1) = self.knots[i];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Abscissae where the function crosses level `c` inside a non-constant segment.
    pub fn roots(&self, c: &Rational) -> Vec<Rational> {
        self.knots
            .windows(2)
            .filter_map(|w| {
                let ((x0, y0), (x1, y1)) = (w[0], w[1]);
                if y0 == y1 {
                    return None;
                }
                let t = (c - y0) / (y1 - y0);
                (t.is_positive() && t < Rational::one()).then(|| x0 + t * (x1 - x0))
            })
            .collect()
    }

    /// `{x ∈ [0,1] : f(x) cmp c}`, exactly.
    pub fn level_set(&self, cmp: Cmp, c: &Rational) -> IntervalSet {
        let crit = self.knot_xs().chain(self.roots(c));
        IntervalSet::from_predicate(crit, |x| cmp.holds(&self.eval(x), c))
    }

    /// Abscissae where `self` and `other` cross strictly inside a common linear piece.
    pub fn crossings(&self, other: &PlFunction) -> Vec<Rational> {
        let mut xs: Vec<Rational> = self.knot_xs().chain(other.knot_xs()).collect();
        xs.sort();
        xs.dedup();
        xs.windows(2)
            .filter_map(|w| {
                let d0 = self.eval(&w[0]) - other.eval(&w[0]);
                let d1 = self.eval(&w[1]) - other.eval(&w[1]);
                (d0.signum() * d1.signum() == -Rational::one())
                    .then(|| w[0] + d0 / (d0 - d1) * (w[1] - w[0]))
            })
            .collect()
    }
}

impl Serialize for PlFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[String; 2]> = self
            .knots
            .iter()
            .map(|(x, y)| [x.to_string(), y.to_string()])
            .collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PlFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[String; 2]>::deserialize(d)?;
        let knots = pairs
            .iter()
            .map(|[x, y]| Ok((parse_rational(x)?, parse_rational(y)?)))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        PlFunction::new(knots).map_err(serde::de::Error::custom)
    }
}

/// One branch of a PL multivalued map: on `domain`, the value is the closed
/// interval `[lower(x), upper(x)]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlBranch {
    pub domain: IntervalSet,
    pub lower: PlFunction,
    pub upper: PlFunction,
}

impl PlBranch {
    pub fn single(domain: IntervalSet, f: PlFunction) -> Self {
        PlBranch {
            domain,
            lower: f.clone(),
            upper: f,
        }
    }

    pub fn envelope(domain: IntervalSet, lower: PlFunction, upper: PlFunction) -> Self {
        PlBranch { domain, lower, upper }
    }

    pub fn value_at(&self, x: &Rational) -> Interval {
        Interval::closed(self.lower.eval(x), self.upper.eval(x)).expect("validated lower <= upper")
    }

    pub fn is_single_valued(&self) -> bool {
        self.lower == self.upper
    }
}

/// Regularity class of a multivalued map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularity {
    Continuous,
    Lsc,
    Usc,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularityReport {
    pub class: Regularity,
    /// Breakpoints where upper semicontinuity fails.
    pub usc_failures: Vec<Rational>,
    /// Breakpoints where lower semicontinuity fails.
    pub lsc_failures: Vec<Rational>,
}

/// A piecewise-linear multivalued map `φ: [0,1] ⊸ [0,1]`:
/// `φ(x)` is the union of the values of the branches whose domain contains `x`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlMultiMap {
    branches: Vec<PlBranch>,
}

impl<'de> Deserialize<'de> for PlMultiMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            branches: Vec<PlBranch>,
        }
        let raw = Raw::deserialize(d)?;
        PlMultiMap::new(raw.branches).map_err(serde::de::Error::custom)
    }
}

impl PlMultiMap {
    pub fn new(branches: Vec<PlBranch>) -> Result<Self> {
        let covered = branches
            .iter()
            .fold(IntervalSet::empty(), |acc, b| acc.union(&b.domain));
        if !covered.is_unit() {
            return Err(Error::Domain(format!(
                "branch domains leave {} uncovered",
                covered.complement()
            )));
        }
        for (i, b) in branches.iter().enumerate() {
            // lower and upper are linear between their knots, so checking the
            // knots and domain endpoints inside the domain closure suffices
            for piece in b.domain.pieces() {
                let mut probes = vec![piece.lo.value, piece.hi.value];
                probes.extend(
                    b.lower
                        .knot_xs()
                        .chain(b.upper.knot_xs())
                        .filter(|x| *x > piece.lo.value && *x < piece.hi.value),
                );
                if let Some(x) = probes.iter().find(|x| b.lower.eval(x) > b.upper.eval(x)) {
                    return Err(Error::Domain(format!("branch {i}: lower > upper at {x}")));
                }
            }
        }
        Ok(PlMultiMap { branches })
    }

    /// A single-valued PL map as a one-branch multivalued map.
    pub fn single_valued(f: PlFunction) -> Self {
        Self::new(vec![PlBranch::single(IntervalSet::unit(), f)]).expect("covers [0,1]")
    }

    pub fn branches(&self) -> &[PlBranch] {
        &self.branches
    }

    fn check_point(x: &Rational) -> Result<()> {
        if x.is_negative() || *x > Rational::one() {
            return Err(Error::Domain(format!("{x} outside [0,1]")));
        }
        Ok(())
    }

    /// The exact value set `φ(x)`.
    pub fn eval(&self, x: &Rational) -> Result<IntervalSet> {
        Self::check_point(x)?;
        let raw: Vec<Interval> = self
            .branches
            .iter()
            .filter(|b| b.domain.contains(x))
            .map(|b| b.value_at(x))
            .collect();
        IntervalSet::normalize(&raw)
    }

    /// Sorted abscissae at which the branch structure can change: every knot,
    /// every domain endpoint, and `0`, `1`.
    pub fn breakpoints(&self) -> Vec<Rational> {
        let mut xs = vec![Rational::zero(), Rational::one()];
        for b in &self.branches {
            xs.extend(b.lower.knot_xs());
            xs.extend(b.upper.knot_xs());
            xs.extend(b.domain.endpoints());
        }
        xs.sort();
        xs.dedup();
        xs
    }

    /// Union of the limiting values at `x0` of branches active near `probe`,
    /// where `probe` lies in an open gap adjacent to `x0`.
    fn side_limit(&self, x0: &Rational, probe: &Rational) -> IntervalSet {
        let raw: Vec<Interval> = self
            .branches
            .iter()
            .filter(|b| b.domain.contains(probe))
            .map(|b| b.value_at(x0))
            .collect();
        IntervalSet::normalize(&raw).expect("values in [0,1]")
    }

    /// One-sided limit sets `(left, right)` at each breakpoint (`None` at the ends).
    pub(crate) fn limit_sets(&self) -> Vec<(Rational, Option<IntervalSet>, Option<IntervalSet>)> {
        let bp = self.breakpoints();
        let two = Rational::from_integer(2);
        bp.iter()
            .enumerate()
            .map(|(i, x0)| {
                let left = i.checked_sub(1).map(|j| self.side_limit(x0, &((bp[j] + x0) / two)));
                let right = bp.get(i + 1).map(|q| self.side_limit(x0, &((x0 + q) / two)));
                (*x0, left, right)
            })
            .collect()
    }

    /// Decides upper/lower semicontinuity symbolically. Between breakpoints the
    /// map is continuous; at a breakpoint `x0` it is u.s.c. iff every one-sided
    /// limit set is contained in `φ(x0)`, and l.s.c. iff `φ(x0)` is contained in
    /// every one-sided limit set.
    pub fn classify_regularity(&self) -> RegularityReport {
        let mut usc_failures = Vec::new();
        let mut lsc_failures = Vec::new();
        for (x0, left, right) in self.limit_sets() {
            let value = self.eval(&x0).expect("breakpoints lie in [0,1]");
            let sides: Vec<&IntervalSet> = left.iter().chain(right.iter()).collect();
            if !sides.iter().all(|s| s.is_subset(&value)) {
                usc_failures.push(x0);
            }
            if !sides.iter().all(|s| value.is_subset(s)) {
                lsc_failures.push(x0);
            }
        }
        let class = match (usc_failures.is_empty(), lsc_failures.is_empty()) {
            (true, true) => Regularity::Continuous,
            (true, false) => Regularity::Usc,
            (false, true) => Regularity::Lsc,
            (false, false) => Regularity::Neither,
        };
        RegularityReport {
            class,
            usc_failures,
            lsc_failures,
        }
    }

    /// Outer approximation on the grid `{i/m}`: `j/m ∈ φ̂(i/m)` iff `j/m` is
    /// within `1/m` of `φ(i/m)`.
    pub fn discretize(&self, m: usize) -> Result<FiniteRelation> {
        if m < 2 {
            return Err(Error::Domain("grid size must be at least 2".into()));
        }
        let mi = m as i128;
        let space = Arc::new(FiniteMetricSpace::unit_grid(m));
        let values = (0..=mi)
            .map(|i| {
                let v = self.eval(&Rational::new(i, mi))?;
                let mut set = PointSet::empty(m + 1);
                for piece in v.pieces() {
                    let lo = (piece.lo.value * mi).ceil().to_integer() - 1;
                    let hi = (piece.hi.value * mi).floor().to_integer() + 1;
                    for j in lo.max(0)..=hi.min(mi) {
                        set.insert(j as usize);
                    }
                }
                Ok(set)
            })
            .collect::<Result<Vec<_>>>()?;
        FiniteRelation::new(space, values)
    }

    /// Every value is a single point.
    pub fn is_single_valued(&self) -> bool {
        let bp = self.breakpoints();
        let two = Rational::from_integer(2);
        let mut probes = bp.clone();
        probes.extend(bp.windows(2).map(|w| (w[0] + w[1]) / two));
        // on each gap the active branches are fixed; they must agree and be degenerate
        self.branches.iter().all(PlBranch::is_single_valued)
            && probes.iter().all(|x| {
                let v = self.eval(x).expect("in range");
                v.pieces().len() == 1 && v.pieces()[0].is_singleton()
            })
            && self.pairwise_agree_on_overlaps()
    }

    fn pairwise_agree_on_overlaps(&self) -> bool {
        for (i, a) in self.branches.iter().enumerate() {
            for b in &self.branches[i + 1..] {
                let overlap = a.domain.intersect(&b.domain);
                if overlap.is_empty() {
                    continue;
                }
                let crit: Vec<Rational> = a
                    .lower
                    .knot_xs()
                    .chain(b.lower.knot_xs())
                    .chain(overlap.endpoints())
                    .collect();
                let differ = IntervalSet::from_predicate(crit, |x| a.lower.eval(x) != b.lower.eval(x));
                if !differ.intersect(&overlap).is_empty() {
                    return false;
                }
            }
        }
        true
    }

    /// Number-line abscissae where any two envelope functions cross.
    pub(crate) fn envelope_crossings(&self) -> Vec<Rational> {
        let fns: Vec<&PlFunction> = self
            .branches
            .iter()
            .flat_map(|b| [&b.lower, &b.upper])
            .collect();
        let mut xs = Vec::new();
        for (i, f) in fns.iter().enumerate() {
            for g in &fns[i + 1..] {
                xs.extend(f.crossings(g));
            }
        }
        xs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::rat;

    fn set(s: &str) -> IntervalSet {
        s.parse().unwrap()
    }

    #[test]
    fn tent_at_one_half() {
        let tent = presets::shifted_tent();
        assert_eq!(tent.eval(&rat(1, 2)).unwrap(), IntervalSet::point(rat(3, 4)).unwrap());
        assert_eq!(tent.eval(&rat(1, 1)).unwrap(), IntervalSet::point(rat(1, 4)).unwrap());
    }

    #[test]
    fn endpoint_split_values() {
        let split = presets::endpoint_split();
        assert_eq!(split.eval(&rat(0, 1)).unwrap(), set("{0} u {1}"));
        assert_eq!(split.eval(&rat(1, 1)).unwrap(), set("{0} u {1}"));
        assert_eq!(split.eval(&rat(1, 3)).unwrap(), set("{1/3}"));
    }

    #[test]
    fn eval_outside_unit_fails() {
        assert!(presets::shifted_tent().eval(&rat(3, 2)).is_err());
    }

    #[test]
    fn level_sets_are_exact() {
        let f = PlFunction::new(vec![(rat(0, 1), rat(1, 4)), (rat(1, 2), rat(3, 4)), (rat(1, 1), rat(1, 4))]).unwrap();
        assert_eq!(f.level_set(Cmp::Le, &rat(1, 2)), set("[0,1/4] u [3/4,1]"));
        assert_eq!(f.level_set(Cmp::Gt, &rat(1, 2)), set("(1/4,3/4)"));
        assert_eq!(f.level_set(Cmp::Ge, &rat(3, 4)), set("{1/2}"));
        assert_eq!(f.level_set(Cmp::Lt, &rat(1, 4)), IntervalSet::empty());
    }

    #[test]
    fn validation_rejects_bad_maps() {
        // uncovered point 1/2
        let r = PlMultiMap::new(vec![
            PlBranch::single(set("[0,1/2)"), PlFunction::identity()),
            PlBranch::single(set("(1/2,1]"), PlFunction::identity()),
        ]);
        assert!(r.is_err());
        // lower above upper
        let r = PlMultiMap::new(vec![PlBranch::envelope(
            IntervalSet::unit(),
            PlFunction::constant(rat(1, 2)).unwrap(),
            PlFunction::identity(),
        )]);
        assert!(r.is_err());
        // but fine where the domain avoids the violation
        let r = PlMultiMap::new(vec![
            PlBranch::envelope(set("[1/2,1]"), PlFunction::constant(rat(1, 2)).unwrap(), PlFunction::identity()),
            PlBranch::single(set("[0,1/2)"), PlFunction::identity()),
        ]);
        assert!(r.is_ok());
        assert!(PlFunction::new(vec![(rat(0, 1), rat(0, 1)), (rat(1, 2), rat(1, 1))]).is_err());
        assert!(PlFunction::affine(rat(2, 1), rat(0, 1)).is_err());
    }

    #[test]
    fn tent_is_continuous() {
        assert_eq!(presets::shifted_tent().classify_regularity().class, Regularity::Continuous);
    }

    #[test]
    fn endpoint_split_is_usc_only() {
        let r = presets::endpoint_split().classify_regularity();
        assert_eq!(r.class, Regularity::Usc);
        assert_eq!(r.lsc_failures, vec![rat(0, 1), rat(1, 1)]);
    }

    #[test]
    fn jump_to_full_interval_is_usc() {
        // φ(x) = {x} for x < 1/2, [0,1] for x ≥ 1/2
        let phi = PlMultiMap::new(vec![
            PlBranch::single(set("[0,1/2)"), PlFunction::identity()),
            PlBranch::envelope(
                set("[1/2,1]"),
                PlFunction::constant(rat(0, 1)).unwrap(),
                PlFunction::constant(rat(1, 1)).unwrap(),
            ),
        ])
        .unwrap();
        let r = phi.classify_regularity();
        assert_eq!(r.class, Regularity::Usc);
        assert_eq!(r.lsc_failures, vec![rat(1, 2)]);
    }

    #[test]
    fn discretize_identity_and_tent() {
        let id = PlMultiMap::single_valued(PlFunction::identity()).discretize(4).unwrap();
        for i in 0..=4usize {
            let expect: Vec<usize> = (i.saturating_sub(1)..=(i + 1).min(4)).collect();
            assert_eq!(id.image(i).iter().collect::<Vec<_>>(), expect);
        }
        let tent = presets::shifted_tent().discretize(4).unwrap();
        // grid index 2 is x = 1/2 and 3 is 3/4
        assert!(tent.image(2).contains(3));
        for j in tent.image(2).iter() {
            let y = rat(j as i128, 4);
            let d = tent_dist(&y);
            assert!(d <= rat(1, 4));
        }
        assert!(presets::shifted_tent().discretize(1).is_err());
    }

    fn tent_dist(y: &Rational) -> Rational {
        presets::shifted_tent().eval(&rat(1, 2)).unwrap().distance_to(y).unwrap()
    }

    #[test]
    fn constant_unit_interval_discretizes_to_full() {
        let full = PlMultiMap::new(vec![PlBranch::envelope(
            IntervalSet::unit(),
            PlFunction::constant(rat(0, 1)).unwrap(),
            PlFunction::constant(rat(1, 1)).unwrap(),
        )])
        .unwrap();
        for m in [2, 5, 8] {
            let rel = full.discretize(m).unwrap();
            assert!(rel.values().iter().all(|v| v.len() == m + 1));
        }
    }

    #[test]
    fn crossings_found_inside_pieces() {
        let f = PlFunction::identity();
        let g = PlFunction::affine(rat(-1, 1), rat(1, 1)).unwrap();
        assert_eq!(f.crossings(&g), vec![rat(1, 2)]);
        assert!(f.crossings(&f).is_empty());
    }

    #[test]
    fn single_valued_detection() {
        assert!(presets::shifted_tent().is_single_valued());
        assert!(!presets::endpoint_split().is_single_valued());
    }
}
