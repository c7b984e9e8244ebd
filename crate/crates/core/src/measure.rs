//! Probability measures on the two carriers.

use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::carrier::SetAlgebra;
use crate::error::{Error, Result};
use crate::interval::{Boundary, Interval, IntervalSet};
use crate::pointset::PointSet;
use crate::Rational;

/// A probability measure evaluated exactly on the sets of one carrier.
pub trait ProbabilityMeasure<S: SetAlgebra> {
    fn mass(&self, set: &S) -> Rational;

    /// Rejects a measure that lives on a different carrier than `universe`.
    fn check_carrier(&self, _universe: &S) -> Result<()> {
        Ok(())
    }
}

/// Point weights on `0..n`, stored as integer numerators over one denominator.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointMeasure {
    numerators: Vec<i128>,
    denominator: i128,
}

impl PointMeasure {
    pub fn new(weights: &[Rational]) -> Result<Self> {
        if weights.iter().any(|w| *w < Rational::zero()) {
            return Err(Error::Domain("negative point weight".into()));
        }
        let total: Rational = weights.iter().sum();
        if total != Rational::one() {
            return Err(Error::Domain(format!("point weights sum to {total}, not 1")));
        }
        let denominator = weights.iter().fold(1i128, |d, w| d.lcm(w.denom()));
        let numerators = weights
            .iter()
            .map(|w| w.numer() * (denominator / w.denom()))
            .collect();
        Ok(PointMeasure {
            numerators,
            denominator,
        })
    }

    /// Normalizes nonnegative integer weights; at least one must be positive.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::Domain("all weights are zero".into()));
        }
        let g = counts.iter().fold(total, |g, &c| g.gcd(&c));
        Ok(PointMeasure {
            numerators: counts.iter().map(|&c| i128::from(c / g)).collect(),
            denominator: i128::from(total / g),
        })
    }

    pub fn uniform(n: usize) -> Self {
        PointMeasure {
            numerators: vec![1; n],
            denominator: n as i128,
        }
    }

    pub fn point_mass(n: usize, i: usize) -> Self {
        let mut numerators = vec![0; n];
        numerators[i] = 1;
        PointMeasure {
            numerators,
            denominator: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    pub fn weight(&self, i: usize) -> Rational {
        Rational::new(self.numerators[i], self.denominator)
    }

    pub fn weights(&self) -> Vec<Rational> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// Numerators over [`Self::denominator`]; they sum to the denominator.
    pub fn numerators(&self) -> &[i128] {
        &self.numerators
    }

    pub fn denominator(&self) -> i128 {
        self.denominator
    }

    /// Numerator of `μ(set)` over the common denominator.
    pub fn mass_numerator(&self, set: &PointSet) -> i128 {
        set.iter().map(|i| self.numerators[i]).sum()
    }
}

impl ProbabilityMeasure<PointSet> for PointMeasure {
    fn mass(&self, set: &PointSet) -> Rational {
        Rational::new(self.mass_numerator(set), self.denominator)
    }

    fn check_carrier(&self, universe: &PointSet) -> Result<()> {
        if universe.universe_size() != self.len() {
            return Err(Error::Mismatch(format!(
                "measure on {} points, carrier has {}",
                self.len(),
                universe.universe_size()
            )));
        }
        Ok(())
    }
}

/// A measure on `[0, 1]`: a piecewise-constant density plus finitely many atoms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "IntervalMeasureRepr", into = "IntervalMeasureRepr")]
pub struct IntervalMeasure {
    /// `(cell, density)`; the cells partition `[0, 1]` in increasing order.
    cells: Vec<(IntervalSet, Rational)>,
    atoms: Vec<(Rational, Rational)>,
}

impl IntervalMeasure {
    /// `breaks` are the interior cell boundaries `0 < t₁ < … < t_k < 1`;
    /// `densities` has one entry per cell.
    pub fn new(breaks: &[Rational], densities: &[Rational], atoms: &[(Rational, Rational)]) -> Result<Self> {
        if densities.len() != breaks.len() + 1 {
            return Err(Error::Domain("need one density per cell".into()));
        }
        let mut edges = vec![Rational::zero()];
        edges.extend(breaks.iter().copied());
        edges.push(Rational::one());
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("cell boundaries must increase strictly inside (0, 1)".into()));
        }
        if densities.iter().any(|d| *d < Rational::zero()) || atoms.iter().any(|(_, m)| *m < Rational::zero()) {
            return Err(Error::Domain("negative density or atom".into()));
        }
        let mut cells = Vec::with_capacity(densities.len());
        for (k, d) in densities.iter().enumerate() {
            // cells are [t₀, t₁), [t₁, t₂), …, [t_k, 1]; boundaries carry no mass
            let cell = if k + 1 == densities.len() {
                Interval::closed(edges[k], edges[k + 1])?
            } else {
                Interval::new(
                    Boundary::closed(edges[k]),
                    Boundary::open(edges[k + 1]),
                )?
            };
            cells.push((IntervalSet::normalize(&[cell])?, *d));
        }
        let mut sorted_atoms: Vec<(Rational, Rational)> = Vec::new();
        for &(x, m) in atoms {
            if x < Rational::zero() || x > Rational::one() {
                return Err(Error::Domain(format!("atom at {x} outside [0, 1]")));
            }
            match sorted_atoms.iter_mut().find(|(y, _)| *y == x) {
                Some(a) => a.1 += m,
                None => sorted_atoms.push((x, m)),
            }
        }
        sorted_atoms.sort();
        let measure = IntervalMeasure {
            cells,
            atoms: sorted_atoms,
        };
        let total = measure.mass(&IntervalSet::unit());
        if total != Rational::one() {
            return Err(Error::Domain(format!("total mass {total}, not 1")));
        }
        Ok(measure)
    }

    pub fn lebesgue() -> Self {
        IntervalMeasure {
            cells: vec![(IntervalSet::unit(), Rational::one())],
            atoms: Vec::new(),
        }
    }

    pub fn atoms(&self) -> &[(Rational, Rational)] {
        &self.atoms
    }

    /// Weights for the grid points `i/m`, `0 ≤ i ≤ m`: point `i` receives the
    /// mass of its nearest-point cell `[i/m − 1/2m, i/m + 1/2m)` (the last one closed).
    pub fn grid_weights(&self, m: usize) -> Result<PointMeasure> {
        let two_m = 2 * m as i128;
        let weights = (0..=m as i128)
            .map(|i| {
                let lo = Rational::new((2 * i - 1).max(0), two_m);
                let hi = Rational::new((2 * i + 1).min(two_m), two_m);
                let hi = if i == m as i128 { Boundary::closed(hi) } else { Boundary::open(hi) };
                let cell = IntervalSet::normalize(&[Interval::new(Boundary::closed(lo), hi)?])?;
                Ok(self.mass(&cell))
            })
            .collect::<Result<Vec<_>>>()?;
        PointMeasure::new(&weights)
    }
}

impl ProbabilityMeasure<IntervalSet> for IntervalMeasure {
    fn mass(&self, set: &IntervalSet) -> Rational {
        let mut total = Rational::zero();
        for (cell, d) in &self.cells {
            if d.is_zero() {
                continue;
            }
            total += if cell.is_unit() {
                set.lebesgue() * d
            } else {
                cell.intersect(set).lebesgue() * d
            };
        }
        for (x, m) in &self.atoms {
            if set.contains(x) {
                total += m;
            }
        }
        total
    }
}

#[derive(Serialize, Deserialize)]
struct IntervalMeasureRepr {
    #[serde(default)]
    breaks: Vec<String>,
    densities: Vec<String>,
    #[serde(default)]
    atoms: Vec<(String, String)>,
}

impl TryFrom<IntervalMeasureRepr> for IntervalMeasure {
    type Error = Error;

    fn try_from(r: IntervalMeasureRepr) -> Result<Self> {
        use crate::interval::parse_rational;
        let breaks = r.breaks.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
        let densities = r.densities.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
        let atoms = r
            .atoms
            .iter()
            .map(|(x, m)| Ok((parse_rational(x)?, parse_rational(m)?)))
            .collect::<Result<Vec<_>>>()?;
        IntervalMeasure::new(&breaks, &densities, &atoms)
    }
}

impl From<IntervalMeasure> for IntervalMeasureRepr {
    fn from(m: IntervalMeasure) -> Self {
        IntervalMeasureRepr {
            breaks: m.cells.iter().skip(1).map(|(c, _)| c.pieces()[0].lo.value.to_string()).collect(),
            densities: m.cells.iter().map(|(_, d)| d.to_string()).collect(),
            atoms: m.atoms.iter().map(|(x, a)| (x.to_string(), a.to_string())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn set(s: &str) -> IntervalSet {
        s.parse().unwrap()
    }

    #[test]
    fn point_weights_share_a_denominator() {
        let mu = PointMeasure::new(&[rat(1, 2), rat(1, 3), rat(1, 6)]).unwrap();
        assert_eq!(mu.denominator(), 6);
        assert_eq!(mu.numerators(), &[3, 2, 1]);
        assert_eq!(mu.mass(&PointSet::from_indices(3, [0, 2])), rat(2, 3));
    }

    #[test]
    fn point_weights_must_sum_to_one() {
        assert!(PointMeasure::new(&[rat(1, 2), rat(1, 3)]).is_err());
        assert!(PointMeasure::new(&[rat(3, 2), rat(-1, 2)]).is_err());
        assert!(PointMeasure::from_counts(&[0, 0]).is_err());
        assert_eq!(PointMeasure::from_counts(&[2, 2, 4]).unwrap().weights(), vec![rat(1, 4), rat(1, 4), rat(1, 2)]);
    }

    #[test]
    fn carrier_size_checked() {
        let mu = PointMeasure::uniform(3);
        assert!(mu.check_carrier(&PointSet::full(4)).is_err());
        assert!(mu.check_carrier(&PointSet::full(3)).is_ok());
    }

    #[test]
    fn lebesgue_is_length() {
        let leb = IntervalMeasure::lebesgue();
        assert_eq!(leb.mass(&set("[0,1/4] u (1/2,3/4) u {1}")), rat(1, 2));
        assert_eq!(leb.mass(&set("{1/3}")), rat(0, 1));
    }

    #[test]
    fn density_and_atoms() {
        // density 1 on [0,1/2), 0 after, plus an atom of 1/2 at 3/4
        let mu = IntervalMeasure::new(&[rat(1, 2)], &[rat(1, 1), rat(0, 1)], &[(rat(3, 4), rat(1, 2))]).unwrap();
        assert_eq!(mu.mass(&set("[0,1/4]")), rat(1, 4));
        assert_eq!(mu.mass(&set("(1/2,1]")), rat(1, 2));
        assert_eq!(mu.mass(&set("(1/2,3/4)")), rat(0, 1));
        assert!(IntervalMeasure::new(&[], &[rat(1, 2)], &[]).is_err());
    }

    #[test]
    fn lebesgue_grid_weights() {
        let w = IntervalMeasure::lebesgue().grid_weights(4).unwrap().weights();
        assert_eq!(w, vec![rat(1, 8), rat(1, 4), rat(1, 4), rat(1, 4), rat(1, 8)]);
    }

    #[test]
    fn serde_round_trip() {
        let mu = IntervalMeasure::new(&[rat(1, 3)], &[rat(3, 2), rat(3, 4)], &[]).unwrap();
        let json = serde_json::to_string(&mu).unwrap();
        let back: IntervalMeasure = serde_json::from_str(&json).unwrap();
        assert_eq!(mu, back);
    }
}
