use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::pointset::PointSet;
use crate::Rational;

/// A finite metric space on the points `0..n` with exact rational distances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteMetricSpace {
    dist: Vec<Vec<Rational>>,
}

impl FiniteMetricSpace {
    /// Validates symmetry, positivity off the diagonal and the triangle inequality.
    pub fn new(dist: Vec<Vec<Rational>>) -> Result<Self> {
        let n = dist.len();
        if n == 0 {
            return Err(Error::Domain("metric space must have at least one point".into()));
        }
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Domain(format!("distance row {i} has length {}", row.len())));
            }
            if !row[i].is_zero() {
                return Err(Error::Domain(format!("dist({i},{i}) != 0")));
            }
            for j in 0..n {
                if row[j] != dist[j][i] {
                    return Err(Error::Domain(format!("dist not symmetric at ({i},{j})")));
                }
                if i != j && !row[j].is_positive() {
                    return Err(Error::Domain(format!("dist({i},{j}) must be positive")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if dist[i][j] > dist[i][k] + dist[k][j] {
                        return Err(Error::Domain(format!(
                            "triangle inequality fails for ({i},{j}) via {k}"
                        )));
                    }
                }
            }
        }
        Ok(FiniteMetricSpace { dist })
    }

    /// Skips validation; for matrices that are metrics by construction.
    pub(crate) fn from_trusted(dist: Vec<Vec<Rational>>) -> Self {
        FiniteMetricSpace { dist }
    }

    /// `n` points at mutual distance 1.
    pub fn discrete(n: usize) -> Self {
        let dist = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { Rational::zero() } else { Rational::one() })
                    .collect()
            })
            .collect();
        FiniteMetricSpace { dist }
    }

    /// Distinct points of the real line with the absolute-difference metric.
    pub fn on_line(xs: &[Rational]) -> Result<Self> {
        let dist: Vec<Vec<Rational>> = xs
            .iter()
            .map(|a| xs.iter().map(|b| (a - b).abs()).collect())
            .collect();
        for i in 0..xs.len() {
            for j in 0..i {
                if xs[i] == xs[j] {
                    return Err(Error::Domain(format!("duplicate point {}", xs[i])));
                }
            }
        }
        if xs.is_empty() {
            return Err(Error::Domain("metric space must have at least one point".into()));
        }
        Ok(FiniteMetricSpace { dist })
    }

    /// The grid `{i/m : 0 ≤ i ≤ m}` of `[0, 1]`.
    pub fn unit_grid(m: usize) -> Self {
        let xs: Vec<Rational> = (0..=m as i128).map(|i| Rational::new(i, m as i128)).collect();
        Self::on_line(&xs).expect("grid points are distinct")
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn dist(&self, i: usize, j: usize) -> Rational {
        self.dist[i][j]
    }

    pub fn matrix(&self) -> &[Vec<Rational>] {
        &self.dist
    }

    pub fn diameter(&self) -> Rational {
        self.dist
            .iter()
            .flat_map(|r| r.iter())
            .copied()
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// `close[i][j]` iff `dist(i, j) ≤ eps`.
    pub fn closeness(&self, eps: &Rational) -> Vec<Vec<bool>> {
        self.dist
            .iter()
            .map(|r| r.iter().map(|d| d <= eps).collect())
            .collect()
    }
}

/// A multivalued map on a finite metric space: every point has a nonempty set of images.
#[derive(Debug, Clone)]
pub struct FiniteRelation {
    space: Arc<FiniteMetricSpace>,
    values: Vec<PointSet>,
    // pre[y] = {x : y ∈ φ(x)}
    pre: Vec<PointSet>,
}

impl PartialEq for FiniteRelation {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
            && (Arc::ptr_eq(&self.space, &other.space) || self.space == other.space)
    }
}

impl Eq for FiniteRelation {}

impl FiniteRelation {
    pub fn new(space: Arc<FiniteMetricSpace>, values: Vec<PointSet>) -> Result<Self> {
        let n = space.len();
        if values.len() != n {
            return Err(Error::Domain(format!(
                "relation has {} value sets for {n} points",
                values.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if v.universe_size() != n {
                return Err(Error::Domain(format!("value set of {i} has wrong universe")));
            }
            if v.is_empty() {
                return Err(Error::Domain(format!("value set of point {i} is empty")));
            }
        }
        let mut pre = vec![PointSet::empty(n); n];
        for (x, v) in values.iter().enumerate() {
            for y in v.iter() {
                pre[y].insert(x);
            }
        }
        Ok(FiniteRelation { space, values, pre })
    }

    /// Builds a relation from adjacency lists.
    pub fn from_lists(space: Arc<FiniteMetricSpace>, lists: &[Vec<usize>]) -> Result<Self> {
        let n = space.len();
        if let Some(bad) = lists.iter().flatten().find(|&&y| y >= n) {
            return Err(Error::Domain(format!("image point {bad} out of range")));
        }
        let values = lists
            .iter()
            .map(|l| PointSet::from_indices(n, l.iter().copied()))
            .collect();
        Self::new(space, values)
    }

    /// A single-valued map `x ↦ f[x]` viewed as a singleton-valued relation.
    pub fn from_function(space: Arc<FiniteMetricSpace>, f: &[usize]) -> Result<Self> {
        let lists: Vec<Vec<usize>> = f.iter().map(|&y| vec![y]).collect();
        Self::from_lists(space, &lists)
    }

    pub fn identity(space: Arc<FiniteMetricSpace>) -> Self {
        let f: Vec<usize> = (0..space.len()).collect();
        Self::from_function(space, &f).expect("identity is a valid map")
    }

    /// `φ(x) = X` for every `x`.
    pub fn full(space: Arc<FiniteMetricSpace>) -> Self {
        let n = space.len();
        Self::new(space, vec![PointSet::full(n); n]).expect("full relation is valid")
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn image(&self, x: usize) -> &PointSet {
        &self.values[x]
    }

    pub fn values(&self) -> &[PointSet] {
        &self.values
    }

    /// Points mapping into `y`.
    pub fn preimage_of_point(&self, y: usize) -> &PointSet {
        &self.pre[y]
    }

    pub fn is_single_valued(&self) -> bool {
        self.values.iter().all(|v| v.len() == 1)
    }

    /// The unique image of each point, when single-valued.
    pub fn as_function(&self) -> Option<Vec<usize>> {
        self.values.iter().map(|v| {
            let mut it = v.iter();
            match (it.next(), it.next()) {
                (Some(y), None) => Some(y),
                _ => None,
            }
        })
        .collect()
    }

    /// Adjacency lists, in increasing order.
    pub fn to_lists(&self) -> Vec<Vec<usize>> {
        self.values.iter().map(|v| v.iter().collect()).collect()
    }

    /// `(self ∘ inner)(x) = ⋃_{y ∈ inner(x)} self(y)`.
    pub fn compose(&self, inner: &FiniteRelation) -> Result<FiniteRelation> {
        if !(Arc::ptr_eq(&self.space, &inner.space) || self.space == inner.space) {
            return Err(Error::Mismatch("relations live on different spaces".into()));
        }
        let n = self.len();
        let values = inner
            .values
            .iter()
            .map(|ys| {
                ys.iter()
                    .fold(PointSet::empty(n), |acc, y| acc.union(&self.values[y]))
            })
            .collect();
        FiniteRelation::new(self.space.clone(), values)
    }

    /// `φᵏ`; `k = 0` is the identity.
    pub fn power(&self, k: usize) -> FiniteRelation {
        let mut acc = FiniteRelation::identity(self.space.clone());
        for _ in 0..k {
            acc = self.compose(&acc).expect("same space");
        }
        acc
    }

    /// `f ⊂ φ`: `f(x) ∈ φ(x)` for every `x`.
    pub fn admits_selection(&self, f: &[usize]) -> bool {
        f.len() == self.len() && f.iter().enumerate().all(|(x, &y)| self.values[x].contains(y))
    }
}
