use std::fmt;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};

/// A subset of the points `0..n` of a finite carrier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointSet(FixedBitSet);

impl PointSet {
    pub fn empty(n: usize) -> Self {
        PointSet(FixedBitSet::with_capacity(n))
    }

    pub fn full(n: usize) -> Self {
        let mut b = FixedBitSet::with_capacity(n);
        b.insert_range(..);
        PointSet(b)
    }

    pub fn from_indices(n: usize, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut b = FixedBitSet::with_capacity(n);
        for i in idx {
            b.insert(i);
        }
        PointSet(b)
    }

    /// Points whose bit is set in `mask` (bit `i` is point `i`).
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Self::from_indices(n, (0..n).filter(|i| mask >> i & 1 == 1))
    }

    pub fn singleton(n: usize, i: usize) -> Self {
        Self::from_indices(n, [i])
    }

    /// Parses `{i, j, ...}` (or `{}`) over the points `0..n`.
    pub fn parse(n: usize, s: &str) -> Result<Self> {
        let t = s.trim();
        let inner = t
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| Error::Parse { pos: 0, msg: format!("point set must be braced: {t:?}") })?;
        let mut set = PointSet::empty(n);
        if inner.trim().is_empty() {
            return Ok(set);
        }
        let mut pos = 1;
        for tok in inner.split(',') {
            let i: usize = tok.trim().parse().map_err(|_| Error::Parse {
                pos,
                msg: format!("expected a point index, found {:?}", tok.trim()),
            })?;
            if i >= n {
                return Err(Error::Domain(format!("point {i} outside 0..{n}")));
            }
            set.insert(i);
            pos += tok.len() + 1;
        }
        Ok(set)
    }

    pub fn universe_size(&self) -> usize {
        self.0.len()
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(i)
    }

    pub fn insert(&mut self, i: usize) {
        self.0.insert(i);
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.ones()
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut b = self.0.clone();
        b.union_with(&other.0);
        PointSet(b)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut b = self.0.clone();
        b.intersect_with(&other.0);
        PointSet(b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        let mut b = self.0.clone();
        b.difference_with(&other.0);
        PointSet(b)
    }

    pub fn complement(&self) -> Self {
        let mut b = self.0.clone();
        b.toggle_range(..);
        PointSet(b)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.0
    }

    /// Bit mask of the members; only meaningful for carriers of at most 64 points.
    pub fn to_mask(&self) -> u64 {
        self.iter().fold(0, |m, i| m | 1 << i)
    }
}

impl fmt::Display for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        let s = PointSet::parse(5, "{ 0, 3 ,4}").unwrap();
        assert_eq!(s.to_string(), "{0,3,4}");
        assert_eq!(PointSet::parse(5, &s.to_string()).unwrap(), s);
        assert!(PointSet::parse(3, "{}").unwrap().is_empty());
        assert!(matches!(PointSet::parse(3, "{1,x}"), Err(Error::Parse { .. })));
        assert!(matches!(PointSet::parse(3, "{3}"), Err(Error::Domain(_))));
        assert!(PointSet::parse(3, "1,2").is_err());
    }
}
