use fixedbitset::FixedBitSet;

use super::SolverConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverSolution {
    /// Size of the best cover found.
    pub size: usize,
    /// Indices (into the input list) of the chosen sets.
    pub chosen: Vec<usize>,
    /// `size` is the true minimum.
    pub exact: bool,
    /// A proven lower bound on the minimum.
    pub lower_bound: usize,
}

/// Minimum number of `sets` whose union is `0..universe`.
///
/// Duplicate and dominated sets are dropped first; a greedy cover seeds the
/// incumbent and the search branches on the uncovered element with the fewest
/// candidate sets.
pub fn minimum_cover(universe: usize, sets: &[FixedBitSet], cfg: &SolverConfig) -> Result<CoverSolution> {
    let mut all = FixedBitSet::with_capacity(universe);
    for s in sets {
        all.union_with(s);
    }
    let uncovered: Vec<usize> = (0..universe).filter(|&e| !all.contains(e)).collect();
    if !uncovered.is_empty() {
        return Err(Error::NotACover(format!("{uncovered:?}")));
    }
    if universe == 0 {
        return Ok(CoverSolution {
            size: 0,
            chosen: Vec::new(),
            exact: true,
            lower_bound: 0,
        });
    }

    let keep = if sets.len() <= cfg.exact_threshold {
        undominated(sets, universe)
    } else {
        distinct(sets, universe)
    };
    let reduced: Vec<FixedBitSet> = keep.iter().map(|&i| resized(&sets[i], universe)).collect();

    let greedy = greedy_cover(universe, &reduced);
    let packing = packing_bound(universe, &reduced);
    let mut solver = Search {
        sets: &reduced,
        best: greedy,
        nodes: 0,
        budget: cfg.node_budget,
        aborted: false,
    };
    let exact = if reduced.len() <= cfg.exact_threshold && solver.best.len() > packing {
        let mut full = FixedBitSet::with_capacity(universe);
        full.insert_range(..);
        let mut stack = Vec::new();
        solver.run(&full, &mut stack);
        !solver.aborted
    } else {
        solver.best.len() == packing
    };
    let mut chosen: Vec<usize> = solver.best.iter().map(|&k| keep[k]).collect();
    chosen.sort_unstable();
    let size = chosen.len();
    Ok(CoverSolution {
        size,
        chosen,
        exact,
        lower_bound: if exact { size } else { packing },
    })
}

fn resized(s: &FixedBitSet, n: usize) -> FixedBitSet {
    let mut b = s.clone();
    b.grow(n);
    b
}

/// Indices of sets not contained in another set (first copy kept among equals).
fn undominated(sets: &[FixedBitSet], universe: usize) -> Vec<usize> {
    let sized: Vec<FixedBitSet> = sets.iter().map(|s| resized(s, universe)).collect();
    let counts: Vec<usize> = sized.iter().map(|s| s.count_ones(..)).collect();
    (0..sized.len())
        .filter(|&i| counts[i] > 0)
        .filter(|&i| {
            !(0..sized.len()).any(|j| {
                j != i
                    && sized[i].is_subset(&sized[j])
                    && (counts[j] > counts[i] || j < i)
            })
        })
        .collect()
}

/// Indices of the first copy of each distinct nonempty set.
fn distinct(sets: &[FixedBitSet], universe: usize) -> Vec<usize> {
    let mut seen = std::collections::HashSet::new();
    (0..sets.len())
        .filter(|&i| !sets[i].is_clear() && seen.insert(resized(&sets[i], universe)))
        .collect()
}

fn greedy_cover(universe: usize, sets: &[FixedBitSet]) -> Vec<usize> {
    let mut left = FixedBitSet::with_capacity(universe);
    left.insert_range(..);
    let mut chosen = Vec::new();
    while !left.is_clear() {
        let (best, _) = sets
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.intersection_count(&left)))
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("sets cover the universe");
        left.difference_with(&sets[best]);
        chosen.push(best);
    }
    chosen
}

/// Elements no two of which share a set each need their own set.
fn packing_bound(universe: usize, sets: &[FixedBitSet]) -> usize {
    let mut used = vec![false; sets.len()];
    let mut count = 0;
    for e in 0..universe {
        let holders: Vec<usize> = (0..sets.len()).filter(|&i| sets[i].contains(e)).collect();
        if holders.iter().all(|&i| !used[i]) {
            count += 1;
            for i in holders {
                used[i] = true;
            }
        }
    }
    count
}

struct Search<'a> {
    sets: &'a [FixedBitSet],
    best: Vec<usize>,
    nodes: u64,
    budget: u64,
    aborted: bool,
}

impl Search<'_> {
    fn run(&mut self, left: &FixedBitSet, stack: &mut Vec<usize>) {
        if self.aborted {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.aborted = true;
            return;
        }
        let remaining = left.count_ones(..);
        if remaining == 0 {
            if stack.len() < self.best.len() {
                self.best = stack.clone();
            }
            return;
        }
        let max_gain = self
            .sets
            .iter()
            .map(|s| s.intersection_count(left))
            .max()
            .unwrap_or(0);
        if max_gain == 0 {
            return;
        }
        let bound = stack.len() + remaining.div_ceil(max_gain);
        if bound >= self.best.len() {
            return;
        }
        // branch on the uncovered element with the fewest holders
        let mut pick = None;
        let mut fewest = usize::MAX;
        for e in left.ones() {
            let c = self.sets.iter().filter(|s| s.contains(e)).count();
            if c < fewest {
                fewest = c;
                pick = Some(e);
                if c <= 1 {
                    break;
                }
            }
        }
        let e = pick.expect("nonempty");
        let mut options: Vec<(usize, usize)> = self
            .sets
            .iter()
            .enumerate()
            .filter(|(_, s)| s.contains(e))
            .map(|(i, s)| (i, s.intersection_count(left)))
            .collect();
        options.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        for (i, _) in options {
            let mut next = left.clone();
            next.difference_with(&self.sets[i]);
            stack.push(i);
            self.run(&next, stack);
            stack.pop();
            if self.aborted {
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bits(n: usize, idx: &[usize]) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(n);
        for &i in idx {
            b.insert(i);
        }
        b
    }

    fn brute_force(universe: usize, sets: &[FixedBitSet]) -> usize {
        let k = sets.len();
        (0u32..1 << k)
            .filter(|mask| {
                let mut u = FixedBitSet::with_capacity(universe);
                for (i, s) in sets.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        u.union_with(s);
                    }
                }
                u.count_ones(..) == universe
            })
            .map(|m| m.count_ones() as usize)
            .min()
            .expect("some cover")
    }

    #[test]
    fn whole_space_member_gives_one() {
        let sets = vec![bits(5, &[0, 1]), bits(5, &[0, 1, 2, 3, 4])];
        let s = minimum_cover(5, &sets, &SolverConfig::default()).unwrap();
        assert_eq!((s.size, s.exact), (1, true));
        assert_eq!(s.chosen, vec![1]);
    }

    #[test]
    fn disjoint_pieces_need_all() {
        let sets: Vec<FixedBitSet> = (0..6).map(|i| bits(6, &[i])).collect();
        assert_eq!(minimum_cover(6, &sets, &SolverConfig::default()).unwrap().size, 6);
    }

    #[test]
    fn not_a_cover() {
        let sets = vec![bits(3, &[0, 1])];
        assert!(matches!(
            minimum_cover(3, &sets, &SolverConfig::default()),
            Err(Error::NotACover(_))
        ));
    }

    #[test]
    fn random_instances_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let n = 10;
            let mut sets: Vec<FixedBitSet> = (0..12)
                .map(|_| {
                    let mut b = FixedBitSet::with_capacity(n);
                    for e in 0..n {
                        if rng.random_bool(0.3) {
                            b.insert(e);
                        }
                    }
                    b
                })
                .collect();
            // make it a cover
            for e in 0..n {
                if !sets.iter().any(|s| s.contains(e)) {
                    let k = rng.random_range(0..sets.len());
                    sets[k].insert(e);
                }
            }
            let s = minimum_cover(n, &sets, &SolverConfig::default()).unwrap();
            assert!(s.exact);
            assert_eq!(s.size, brute_force(n, &sets));
            let mut u = FixedBitSet::with_capacity(n);
            for &i in &s.chosen {
                u.union_with(&sets[i]);
            }
            assert_eq!(u.count_ones(..), n);
        }
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 40;
        let sets: Vec<FixedBitSet> = (0..60)
            .map(|_| {
                let mut b = FixedBitSet::with_capacity(n);
                for e in 0..n {
                    if rng.random_bool(0.15) {
                        b.insert(e);
                    }
                }
                b
            })
            .chain((0..n).map(|e| bits(n, &[e])))
            .collect();
        let cfg = SolverConfig {
            exact_threshold: 2000,
            node_budget: 5,
        };
        let s = minimum_cover(n, &sets, &cfg).unwrap();
        if !s.exact {
            assert!(s.lower_bound <= s.size);
        }
    }
}
