//! Orbit spaces of a finite relation and the entropies built on them:
//! separated and spanning counts under the max metric `d_n` on `Orb_n(φ)`
//! and under the bottleneck pseudometric `d_n^CM` on points.

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::carrier::{FiniteMetricSpace, FiniteRelation, Hyperspace};
use crate::error::{Error, Result};
use crate::estimate::{self, growth_rate, ser_rational, EntropyEstimate};
use crate::solver::{maximum_independent_set, minimum_cover, SolverConfig};
use crate::Rational;

pub const DEFAULT_ORBIT_CAP: usize = 10_000_000;

/// Largest point set for which a pairwise conflict graph is built.
pub const GRAPH_CAP: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OrbitConfig {
    pub solver: SolverConfig,
    pub orbit_cap: usize,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            solver: SolverConfig::default(),
            orbit_cap: DEFAULT_ORBIT_CAP,
        }
    }
}

/// `Orb_n(φ)`: tuples with `x_{i+1} ∈ φ(x_i)`, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitSet {
    n: usize,
    flat: Vec<u32>,
}

impl OrbitSet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.flat.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn get(&self, i: usize) -> &[u32] {
        &self.flat[i * self.n..(i + 1) * self.n]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.flat.chunks_exact(self.n)
    }
}

/// Number of `n`-orbits, saturating.
pub fn count_orbits(phi: &FiniteRelation, n: usize) -> u128 {
    let m = phi.len();
    let mut paths = vec![1u128; m];
    for _ in 1..n {
        paths = (0..m)
            .map(|x| phi.image(x).iter().fold(0u128, |acc, y| acc.saturating_add(paths[y])))
            .collect();
    }
    paths.iter().fold(0u128, |a, &b| a.saturating_add(b))
}

pub fn enumerate_orbits(phi: &FiniteRelation, n: usize, cap: usize) -> Result<OrbitSet> {
    if n == 0 {
        return Err(Error::Domain("orbit length must be at least 1".into()));
    }
    let total = count_orbits(phi, n);
    if total > cap as u128 {
        return Err(Error::CapExceeded {
            what: format!("{total} orbits of length {n}"),
            limit: cap,
        });
    }
    let images: Vec<Vec<u32>> = (0..phi.len())
        .map(|x| phi.image(x).iter().map(|y| y as u32).collect())
        .collect();
    let mut flat = Vec::with_capacity(total as usize * n);
    let mut cur = Vec::with_capacity(n);
    for x in 0..phi.len() as u32 {
        cur.push(x);
        extend(&images, n, &mut cur, &mut flat);
        cur.pop();
    }
    Ok(OrbitSet { n, flat })
}

fn extend(images: &[Vec<u32>], n: usize, cur: &mut Vec<u32>, out: &mut Vec<u32>) {
    if cur.len() == n {
        out.extend_from_slice(cur);
        return;
    }
    let last = *cur.last().expect("nonempty") as usize;
    for &y in &images[last] {
        cur.push(y);
        extend(images, n, cur, out);
        cur.pop();
    }
}

/// `d_n(u, v) = max_i d(u_i, v_i)`.
pub fn dn_distance(space: &FiniteMetricSpace, u: &[u32], v: &[u32]) -> Result<Rational> {
    if u.len() != v.len() || u.is_empty() {
        return Err(Error::Domain(format!("orbit lengths {} and {} differ", u.len(), v.len())));
    }
    Ok(u.iter()
        .zip(v)
        .map(|(&a, &b)| space.dist(a as usize, b as usize))
        .max()
        .expect("nonempty"))
}

/// A separated or spanning count together with one optimal (or best found) witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Count {
    pub count: usize,
    /// Indices into the orbit list (or points, for the pseudometric counts).
    pub witness: Vec<usize>,
    pub exact: bool,
}

/// `close[i]` holds the `j ≠ i` within distance `ε` (closed).
fn closeness_graph(k: usize, close: impl Fn(usize, usize) -> bool) -> Result<Vec<FixedBitSet>> {
    if k > GRAPH_CAP {
        return Err(Error::CapExceeded {
            what: format!("conflict graph on {k} vertices"),
            limit: GRAPH_CAP,
        });
    }
    let mut adj = vec![FixedBitSet::with_capacity(k); k];
    for i in 0..k {
        for j in i + 1..k {
            if close(i, j) {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }
    Ok(adj)
}

/// Largest set pairwise more than `ε` apart: a maximum independent set of the closeness graph.
fn separated(adj: &[FixedBitSet], cfg: &SolverConfig) -> Count {
    let s = maximum_independent_set(adj, cfg);
    Count {
        count: s.size,
        witness: s.members,
        exact: s.exact,
    }
}

/// Smallest set whose closed `ε`-balls cover everything.
fn spanning(adj: &[FixedBitSet], cfg: &SolverConfig) -> Result<Count> {
    let balls: Vec<FixedBitSet> = adj
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut b = row.clone();
            b.insert(i);
            b
        })
        .collect();
    let c = minimum_cover(adj.len(), &balls, cfg)?;
    Ok(Count {
        count: c.size,
        witness: c.chosen,
        exact: c.exact,
    })
}

fn orbit_graph(phi: &FiniteRelation, eps: &Rational, n: usize, cfg: &OrbitConfig) -> Result<(OrbitSet, Vec<FixedBitSet>)> {
    let orbits = enumerate_orbits(phi, n, cfg.orbit_cap)?;
    let close = phi.space().closeness(eps);
    let adj = closeness_graph(orbits.len(), |i, j| {
        orbits
            .get(i)
            .iter()
            .zip(orbits.get(j))
            .all(|(&a, &b)| close[a as usize][b as usize])
    })?;
    Ok((orbits, adj))
}

/// `s_KT(φ, ε, n)`: separation is strict, `d_n > ε`.
pub fn s_kt(phi: &FiniteRelation, eps: &Rational, n: usize, cfg: &OrbitConfig) -> Result<Count> {
    let (_, adj) = orbit_graph(phi, eps, n, cfg)?;
    Ok(separated(&adj, &cfg.solver))
}

/// `r_KT(φ, ε, n)`: spanning uses closed balls, `d_n ≤ ε`.
pub fn r_kt(phi: &FiniteRelation, eps: &Rational, n: usize, cfg: &OrbitConfig) -> Result<Count> {
    let (_, adj) = orbit_graph(phi, eps, n, cfg)?;
    spanning(&adj, &cfg.solver)
}

/// Matrix of `d_n^CM(x, y)`, the least bottleneck distance over pairs of
/// `n`-orbits starting at `x` and `y`.
///
/// Computed by `D₁ = d`, `D_{k+1}(a,b) = max(d(a,b), min_{a'∈φ(a), b'∈φ(b)} D_k(a',b'))`
/// over ranks of the distinct distances.
pub fn dcm_matrix(phi: &FiniteRelation, n: usize) -> Result<Vec<Vec<Rational>>> {
    if n == 0 {
        return Err(Error::Domain("orbit length must be at least 1".into()));
    }
    let space = phi.space();
    let m = phi.len();
    let mut levels: Vec<Rational> = space.matrix().iter().flatten().copied().collect();
    levels.sort();
    levels.dedup();
    let rank = |d: &Rational| levels.binary_search(d).expect("distance is listed") as u32;
    let base: Vec<u32> = (0..m * m).map(|ab| rank(&space.dist(ab / m, ab % m))).collect();
    let images: Vec<Vec<usize>> = (0..m).map(|x| phi.image(x).iter().collect()).collect();
    let mut cur = base.clone();
    for _ in 1..n {
        let next: Vec<u32> = (0..m * m)
            .map(|ab| {
                let (a, b) = (ab / m, ab % m);
                let tail = images[a]
                    .iter()
                    .flat_map(|&a2| images[b].iter().map(move |&b2| a2 * m + b2))
                    .map(|idx| cur[idx])
                    .min()
                    .expect("values are nonempty");
                base[ab].max(tail)
            })
            .collect();
        cur = next;
    }
    Ok((0..m)
        .map(|a| (0..m).map(|b| levels[cur[a * m + b] as usize]).collect())
        .collect())
}

pub fn dcm_distance(phi: &FiniteRelation, x: usize, y: usize, n: usize) -> Result<Rational> {
    if x >= phi.len() || y >= phi.len() {
        return Err(Error::Domain(format!("points {x}, {y} outside a carrier of {}", phi.len())));
    }
    Ok(dcm_matrix(phi, n)?[x][y])
}

fn cm_graph(phi: &FiniteRelation, eps: &Rational, n: usize) -> Result<Vec<FixedBitSet>> {
    let d = dcm_matrix(phi, n)?;
    closeness_graph(phi.len(), |i, j| d[i][j] <= *eps)
}

/// `s_CM(φ, ε, n)`: points pairwise more than `ε` apart in `d_n^CM`.
pub fn s_cm(phi: &FiniteRelation, eps: &Rational, n: usize, cfg: &OrbitConfig) -> Result<Count> {
    Ok(separated(&cm_graph(phi, eps, n)?, &cfg.solver))
}

/// `r_CM(φ, ε, n)`: points whose closed `d_n^CM`-balls cover `X`.
pub fn r_cm(phi: &FiniteRelation, eps: &Rational, n: usize, cfg: &OrbitConfig) -> Result<Count> {
    spanning(&cm_graph(phi, eps, n)?, &cfg.solver)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Separated/spanning orbits under `d_n`.
    Kt,
    /// Separated/spanning points under `d_n^CM`.
    Cm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountRow {
    #[serde(serialize_with = "ser_rational")]
    pub eps: Rational,
    pub n: usize,
    pub s: usize,
    pub r: usize,
    pub sep_rate: f64,
    pub span_rate: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsLevel {
    #[serde(serialize_with = "ser_rational")]
    pub eps: Rational,
    pub sep: EntropyEstimate,
    pub span: EntropyEstimate,
    /// `r ≤ s` at every depth of this level.
    pub span_le_sep: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitEntropy {
    pub family: Family,
    pub rows: Vec<CountRow>,
    pub levels: Vec<EpsLevel>,
}

impl OrbitEntropy {
    pub fn row(&self, eps: &Rational, n: usize) -> Option<&CountRow> {
        self.rows.iter().find(|r| r.eps == *eps && r.n == n)
    }

    pub fn level(&self, eps: &Rational) -> Option<&EpsLevel> {
        self.levels.iter().find(|l| l.eps == *eps)
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.eps.to_string(),
                    r.n.to_string(),
                    r.s.to_string(),
                    r.r.to_string(),
                    r.sep_rate.to_string(),
                    r.span_rate.to_string(),
                    r.exact.to_string(),
                ]
            })
            .collect();
        estimate::to_csv(&["eps", "n", "s", "r", "sep_rate", "span_rate", "exact"], &rows)
    }
}

fn orbit_entropy(
    family: Family,
    eps_ladder: &[Rational],
    depth: usize,
    mut counts: impl FnMut(&Rational, usize) -> Result<(Count, Count)>,
) -> Result<OrbitEntropy> {
    if depth == 0 {
        return Err(Error::Domain("depth must be at least 1".into()));
    }
    let mut rows = Vec::new();
    let mut levels = Vec::new();
    for eps in eps_ladder {
        let mut level_rows = Vec::with_capacity(depth);
        for n in 1..=depth {
            let (s, r) = counts(eps, n)?;
            level_rows.push(CountRow {
                eps: *eps,
                n,
                s: s.count,
                r: r.count,
                sep_rate: growth_rate(s.count, n),
                span_rate: growth_rate(r.count, n),
                exact: s.exact && r.exact,
            });
        }
        let params = estimate::params([("eps", eps.to_string()), ("depth", depth.to_string())]);
        levels.push(EpsLevel {
            eps: *eps,
            sep: EntropyEstimate::from_levels(level_rows.iter().map(|r| (r.sep_rate, r.exact)).collect(), params.clone()),
            span: EntropyEstimate::from_levels(level_rows.iter().map(|r| (r.span_rate, r.exact)).collect(), params),
            span_le_sep: level_rows.iter().all(|r| r.r <= r.s),
        });
        rows.extend(level_rows);
    }
    Ok(OrbitEntropy { family, rows, levels })
}

/// Separated and spanning orbit counts for every `ε` in the ladder and `n ≤ depth`.
pub fn h_kt_estimate(phi: &FiniteRelation, eps_ladder: &[Rational], depth: usize, cfg: &OrbitConfig) -> Result<OrbitEntropy> {
    orbit_entropy(Family::Kt, eps_ladder, depth, |eps, n| {
        let (_, adj) = orbit_graph(phi, eps, n, cfg)?;
        Ok((separated(&adj, &cfg.solver), spanning(&adj, &cfg.solver)?))
    })
}

/// Separated and spanning point counts under `d_n^CM`.
pub fn h_cm_estimate(phi: &FiniteRelation, eps_ladder: &[Rational], depth: usize, cfg: &OrbitConfig) -> Result<OrbitEntropy> {
    orbit_entropy(Family::Cm, eps_ladder, depth, |eps, n| {
        let adj = cm_graph(phi, eps, n)?;
        Ok((separated(&adj, &cfg.solver), spanning(&adj, &cfg.solver)?))
    })
}

/// Orbit counts of the lift `A ↦ ⋃_{x∈A} φ(x)` on nonempty subsets with the Hausdorff metric.
pub fn hyperspace_entropy(
    phi: &FiniteRelation,
    eps_ladder: &[Rational],
    depth: usize,
    hyperspace_cap: usize,
    cfg: &OrbitConfig,
) -> Result<OrbitEntropy> {
    let lift = Hyperspace::lift(phi, hyperspace_cap)?;
    h_kt_estimate(&lift.relation, eps_ladder, depth, cfg)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::carrier::DEFAULT_HYPERSPACE_CAP;
    use crate::{presets, rat};

    fn cfg() -> OrbitConfig {
        OrbitConfig::default()
    }

    fn random_relation(rng: &mut ChaCha8Rng, n: usize) -> FiniteRelation {
        let xs: Vec<Rational> = (0..n).map(|i| rat(i as i128, n as i128)).collect();
        let space = Arc::new(FiniteMetricSpace::on_line(&xs).unwrap());
        let lists: Vec<Vec<usize>> = (0..n)
            .map(|_| {
                let mut v: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.3)).collect();
                if v.is_empty() {
                    v.push(rng.random_range(0..n));
                }
                v
            })
            .collect();
        FiniteRelation::from_lists(space, &lists).unwrap()
    }

    #[test]
    fn orbit_enumeration() {
        let full = presets::full_shift(3);
        assert_eq!(enumerate_orbits(&full, 1, 100).unwrap().len(), 3);
        let o = enumerate_orbits(&full, 4, 100).unwrap();
        assert_eq!(o.len(), 81);
        assert_eq!(o.get(1), &[0, 0, 0, 1]);
        let f = FiniteRelation::from_function(Arc::new(FiniteMetricSpace::discrete(4)), &[1, 2, 3, 0]).unwrap();
        let o = enumerate_orbits(&f, 6, 100).unwrap();
        assert_eq!(o.len(), 4);
        assert_eq!(o.get(2), &[2, 3, 0, 1, 2, 3]);
        for orbit in enumerate_orbits(&presets::shift_like(), 3, 100).unwrap().iter() {
            assert!(orbit.windows(2).all(|w| presets::shift_like().image(w[0] as usize).contains(w[1] as usize)));
        }
        assert!(matches!(enumerate_orbits(&full, 5, 100), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn dn_examples() {
        let space = FiniteMetricSpace::on_line(&[rat(0, 1), rat(1, 4), rat(1, 2)]).unwrap();
        assert_eq!(dn_distance(&space, &[0, 2], &[1, 1]).unwrap(), rat(1, 4));
        assert_eq!(dn_distance(&space, &[0, 2], &[0, 2]).unwrap(), rat(0, 1));
        assert_eq!(dn_distance(&space, &[2], &[0]).unwrap(), rat(1, 2));
        assert!(dn_distance(&space, &[0], &[0, 1]).is_err());
    }

    #[test]
    fn full_shift_counts() {
        for m in 2..=3 {
            let full = presets::full_shift(m);
            for n in 1..=5 {
                let s = s_kt(&full, &rat(1, 2), n, &cfg()).unwrap();
                assert_eq!(s.count, m.pow(n as u32));
                assert!(s.exact);
            }
        }
        let full = presets::full_shift(2);
        assert_eq!(r_kt(&full, &rat(1, 2), 3, &cfg()).unwrap().count, 8);
        assert_eq!(s_kt(&full, &rat(1, 1), 4, &cfg()).unwrap().count, 1);
        assert_eq!(r_kt(&full, &rat(1, 1), 4, &cfg()).unwrap().count, 1);
    }

    fn brute_counts(adj: &[FixedBitSet]) -> (usize, usize) {
        let k = adj.len();
        let mut s = 0;
        let mut r = usize::MAX;
        for mask in 1u32..1 << k {
            let members: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
            if members.iter().all(|&a| members.iter().all(|&b| a == b || !adj[a].contains(b))) {
                s = s.max(members.len());
            }
            if (0..k).all(|y| members.iter().any(|&x| x == y || adj[x].contains(y))) {
                r = r.min(members.len());
            }
        }
        (s, r)
    }

    #[test]
    fn counts_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut checked = 0;
        while checked < 40 {
            let phi = random_relation(&mut rng, 4);
            let n = rng.random_range(1..=3);
            if count_orbits(&phi, n) > 14 {
                continue;
            }
            let eps = rat(rng.random_range(0..4), 4);
            let (_, adj) = orbit_graph(&phi, &eps, n, &cfg()).unwrap();
            let (s, r) = brute_counts(&adj);
            assert_eq!(s_kt(&phi, &eps, n, &cfg()).unwrap().count, s);
            assert_eq!(r_kt(&phi, &eps, n, &cfg()).unwrap().count, r);
            checked += 1;
        }
    }

    #[test]
    fn span_at_most_sep_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ladder = [rat(1, 8), rat(1, 4), rat(1, 2)];
        for _ in 0..30 {
            let size = rng.random_range(2..=6);
            let phi = random_relation(&mut rng, size);
            let kt = h_kt_estimate(&phi, &ladder, 3, &cfg()).unwrap();
            let cm = h_cm_estimate(&phi, &ladder, 3, &cfg()).unwrap();
            for table in [&kt, &cm] {
                assert!(table.levels.iter().all(|l| l.span_le_sep));
                for n in 1..=3 {
                    for w in ladder.windows(2) {
                        assert!(table.row(&w[0], n).unwrap().s >= table.row(&w[1], n).unwrap().s);
                    }
                }
            }
            for eps in &ladder {
                for n in 1..3 {
                    assert!(kt.row(eps, n).unwrap().s <= kt.row(eps, n + 1).unwrap().s);
                }
            }
        }
    }

    #[test]
    fn full_shift_entropy_is_log_two() {
        let kt = h_kt_estimate(&presets::full_shift(2), &[rat(1, 2)], 10, &cfg()).unwrap();
        let level = kt.level(&rat(1, 2)).unwrap();
        assert!((level.sep.reported - std::f64::consts::LN_2).abs() < 1e-9);
        assert!((level.span.reported - std::f64::consts::LN_2).abs() < 1e-9);
        assert!(kt.to_csv().starts_with("eps,n,s,r,sep_rate,span_rate,exact\n1/2,1,2,2,"));
    }

    #[test]
    fn identity_counts_do_not_grow() {
        let id = FiniteRelation::identity(Arc::new(FiniteMetricSpace::unit_grid(4)));
        let kt = h_kt_estimate(&id, &[rat(1, 4)], 6, &cfg()).unwrap();
        assert!(kt.rows.iter().all(|r| r.s == kt.rows[0].s));
    }

    #[test]
    fn dcm_collapses() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = random_relation(&mut rng, 5);
        let d1 = dcm_matrix(&phi, 1).unwrap();
        assert_eq!(d1, phi.space().matrix());
        let full = FiniteRelation::full(phi.space().clone());
        assert_eq!(dcm_matrix(&full, 4).unwrap(), phi.space().matrix());
        // a single-valued map gives the Bowen metric of the unique orbits
        let f = FiniteRelation::from_function(phi.space().clone(), &[2, 0, 4, 4, 1]).unwrap();
        let orbits = enumerate_orbits(&f, 4, 100).unwrap();
        let d = dcm_matrix(&f, 4).unwrap();
        for (x, row) in d.iter().enumerate() {
            for (y, dxy) in row.iter().enumerate() {
                assert_eq!(*dxy, dn_distance(f.space(), orbits.get(x), orbits.get(y)).unwrap());
            }
        }
    }

    #[test]
    fn dcm_matches_orbit_pair_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..30 {
            let phi = random_relation(&mut rng, 5);
            for n in 1..=3 {
                let orbits = enumerate_orbits(&phi, n, 10_000).unwrap();
                let d = dcm_matrix(&phi, n).unwrap();
                for x in 0..5u32 {
                    for y in 0..5u32 {
                        let best = orbits
                            .iter()
                            .filter(|u| u[0] == x)
                            .flat_map(|u| orbits.iter().filter(|v| v[0] == y).map(move |v| (u, v)))
                            .map(|(u, v)| dn_distance(phi.space(), u, v).unwrap())
                            .min()
                            .unwrap();
                        assert_eq!(d[x as usize][y as usize], best);
                    }
                }
            }
        }
    }

    #[test]
    fn dcm_symmetric_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let size = rng.random_range(2..=6);
            let phi = random_relation(&mut rng, size);
            let mut prev = dcm_matrix(&phi, 1).unwrap();
            for n in 2..=4 {
                let d = dcm_matrix(&phi, n).unwrap();
                for x in 0..size {
                    assert_eq!(d[x][x], rat(0, 1));
                    for y in 0..size {
                        assert_eq!(d[x][y], d[y][x]);
                        assert!(prev[x][y] <= d[x][y]);
                    }
                }
                prev = d;
            }
        }
    }

    #[test]
    fn dcm_triangle_inequality_can_fail() {
        // y branches to both p and q; x only reaches p and z only reaches q
        let xs = [rat(0, 1), rat(1, 10), rat(2, 10), rat(3, 10), rat(1, 1)];
        let space = Arc::new(FiniteMetricSpace::on_line(&xs).unwrap());
        let (x, y, z, p, q) = (0, 1, 2, 3, 4);
        let phi = FiniteRelation::from_lists(space, &[vec![p], vec![p, q], vec![q], vec![p], vec![q]]).unwrap();
        let d = dcm_matrix(&phi, 2).unwrap();
        assert!(d[x][z] > d[x][y] + d[y][z]);
    }

    #[test]
    fn full_relation_cm_counts_are_constant() {
        for m in 2..=3 {
            let full = presets::full_shift(m);
            let cm = h_cm_estimate(&full, &[rat(1, 2)], 5, &cfg()).unwrap();
            assert!(cm.rows.iter().all(|r| r.s == m && r.r == m));
            assert_eq!(s_cm(&full, &rat(1, 1), 3, &cfg()).unwrap().count, 1);
        }
    }

    #[test]
    fn single_valued_collapse() {
        let f = FiniteRelation::from_function(Arc::new(FiniteMetricSpace::unit_grid(6)), &[1, 3, 5, 6, 4, 2, 0]).unwrap();
        for eps in [rat(1, 6), rat(1, 3)] {
            for n in 1..=4 {
                assert_eq!(
                    s_kt(&f, &eps, n, &cfg()).unwrap().count,
                    s_cm(&f, &eps, n, &cfg()).unwrap().count
                );
                assert_eq!(
                    r_kt(&f, &eps, n, &cfg()).unwrap().count,
                    r_cm(&f, &eps, n, &cfg()).unwrap().count
                );
            }
        }
    }

    #[test]
    fn hyperspace_examples() {
        let space = Arc::new(FiniteMetricSpace::on_line(&[rat(0, 1), rat(1, 2), rat(1, 1)]).unwrap());
        let full = FiniteRelation::full(space.clone());
        let h = hyperspace_entropy(&full, &[rat(1, 4)], 4, DEFAULT_HYPERSPACE_CAP, &cfg()).unwrap();
        assert!(h.rows.iter().all(|r| r.s == h.rows[0].s));
        let id = FiniteRelation::identity(space.clone());
        let h = hyperspace_entropy(&id, &[rat(1, 4)], 4, DEFAULT_HYPERSPACE_CAP, &cfg()).unwrap();
        assert!(h.rows.iter().all(|r| r.s == 7));
        let f = FiniteRelation::from_function(space, &[1, 2, 0]).unwrap();
        let lifted = hyperspace_entropy(&f, &[rat(1, 4)], 4, DEFAULT_HYPERSPACE_CAP, &cfg()).unwrap();
        let base = h_kt_estimate(&f, &[rat(1, 4)], 4, &cfg()).unwrap();
        for (a, b) in lifted.rows.iter().zip(&base.rows) {
            assert!(a.s >= b.s);
        }
        assert!(hyperspace_entropy(&presets::full_shift(5), &[rat(1, 2)], 2, 4, &cfg()).is_err());
    }
}
