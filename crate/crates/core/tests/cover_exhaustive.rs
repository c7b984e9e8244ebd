//! Cover entropy on every relation over at most four points, against brute force.

use std::sync::Arc;

use mventropy::cover::{cover_join, h_plus_estimate, minimal_subcover, pullback_cover, Cover};
use mventropy::solver::SolverConfig;
use mventropy::{FiniteMetricSpace, FiniteRelation, PointSet};

fn all_relations(n: usize) -> impl Iterator<Item = FiniteRelation> {
    let space = Arc::new(FiniteMetricSpace::discrete(n));
    let choices = (1u64 << n) - 1;
    (0..choices.pow(n as u32)).map(move |mut code| {
        let values = (0..n)
            .map(|_| {
                let m = code % choices + 1;
                code /= choices;
                PointSet::from_mask(n, m)
            })
            .collect();
        FiniteRelation::new(space.clone(), values).unwrap()
    })
}

fn brute_min_subcover(n: usize, members: &[PointSet]) -> usize {
    let full = PointSet::full(n);
    (1u32..1 << members.len())
        .filter(|pick| {
            let union = (0..members.len())
                .filter(|i| pick >> i & 1 == 1)
                .fold(PointSet::empty(n), |acc, i| acc.union(&members[i]));
            union == full
        })
        .map(|pick| pick.count_ones() as usize)
        .min()
        .expect("the whole join covers")
}

fn covers(n: usize) -> Vec<Vec<PointSet>> {
    let singletons = (0..n).map(|i| PointSet::singleton(n, i)).collect();
    let halves = vec![
        PointSet::from_indices(n, 0..n.div_ceil(2)),
        PointSet::from_indices(n, n / 2..n),
    ];
    let chain = (0..n.saturating_sub(1))
        .map(|i| PointSet::from_indices(n, [i, i + 1]))
        .chain((n == 1).then(|| PointSet::full(n)))
        .collect();
    vec![singletons, halves, chain]
}

#[test]
fn joins_and_minimum_subcovers_match_brute_force() {
    let cfg = SolverConfig::default();
    let mut checked = 0;
    for n in 1..=4 {
        for phi in all_relations(n) {
            for members in covers(n) {
                let a = Cover::new(&phi, members).unwrap();
                let entropy = h_plus_estimate(&phi, &a, 3, &cfg).unwrap();
                let mut parts = vec![a.clone()];
                for (depth, row) in (1..=3).zip(&entropy.rows) {
                    if depth > 1 {
                        parts.push(pullback_cover(&phi, &a, depth - 1).unwrap());
                    }
                    let join = cover_join(&parts);
                    assert_eq!(row.join_size, join.len());
                    assert!(row.exact);
                    assert_eq!(row.min_subcover, brute_min_subcover(n, join.members()), "{:?} depth {depth}", phi.to_lists());
                    assert_eq!(minimal_subcover(&phi, &join, &cfg).unwrap().size, row.min_subcover);
                    assert!(row.min_subcover <= a.len().pow(depth as u32));
                    checked += 1;
                }
                let counts: Vec<usize> = entropy.rows.iter().map(|r| r.min_subcover).collect();
                assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
            }
        }
    }
    assert!(checked > 100_000);
}

#[test]
fn single_valued_maps_pull_partitions_back_to_partitions() {
    let cfg = SolverConfig::default();
    for n in 1..=4 {
        for phi in all_relations(n).filter(FiniteRelation::is_single_valued) {
            let points = (0..n).map(|i| PointSet::singleton(n, i)).collect();
            let a = Cover::new(&phi, points).unwrap();
            for row in h_plus_estimate(&phi, &a, 3, &cfg).unwrap().rows {
                assert_eq!(row.min_subcover, row.join_size);
            }
        }
    }
}
