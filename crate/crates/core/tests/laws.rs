//! Algebraic laws of the exact set layer, the preimage engine and relation
//! composition, checked on generated inputs.

use std::sync::Arc;

use mventropy::carrier::Regularity;
use mventropy::{
    presets, rat, Boundary, Carrier, FiniteMetricSpace, FiniteRelation, Interval, IntervalSet, PlBranch, PlFunction,
    PlMultiMap, PointSet, Rational,
};
use proptest::prelude::*;

fn boundary() -> impl Strategy<Value = (i128, bool)> {
    (0i128..=12, any::<bool>())
}

fn interval_set() -> impl Strategy<Value = IntervalSet> {
    prop::collection::vec((boundary(), boundary()), 0..4).prop_map(|raw| {
        let pieces: Vec<Interval> = raw
            .into_iter()
            .filter_map(|((a, ca), (b, cb))| {
                let (lo, hi) = if a <= b { ((a, ca), (b, cb)) } else { ((b, cb), (a, ca)) };
                let bound = |(v, closed): (i128, bool)| {
                    if closed {
                        Boundary::closed(rat(v, 12))
                    } else {
                        Boundary::open(rat(v, 12))
                    }
                };
                Interval::new(bound(lo), bound(hi)).ok()
            })
            .collect();
        IntervalSet::normalize(&pieces).expect("pieces inside [0,1]")
    })
}

/// Grid points `k/48`: every generated endpoint and points on both sides of it.
fn probes() -> Vec<Rational> {
    (0..=48).map(|k| rat(k, 48)).collect()
}

fn pl_function() -> impl Strategy<Value = PlFunction> {
    (2usize..=5)
        .prop_flat_map(|k| prop::collection::vec(0i128..=8, k))
        .prop_map(|ys| {
            let last = ys.len() as i128 - 1;
            PlFunction::new(ys.iter().enumerate().map(|(i, &y)| (rat(i as i128, last), rat(y, 8))).collect())
                .expect("valid knots")
        })
}

fn envelope() -> impl Strategy<Value = (PlFunction, PlFunction)> {
    (2usize..=5)
        .prop_flat_map(|k| prop::collection::vec((0i128..=8, 0i128..=8), k))
        .prop_map(|pairs| {
            let last = pairs.len() as i128 - 1;
            let x = |i: usize| rat(i as i128, last);
            let lower = pairs.iter().enumerate().map(|(i, &(a, b))| (x(i), rat(a.min(b), 8))).collect();
            let upper = pairs.iter().enumerate().map(|(i, &(a, b))| (x(i), rat(a.max(b), 8))).collect();
            (PlFunction::new(lower).expect("valid"), PlFunction::new(upper).expect("valid"))
        })
}

/// Envelope maps, single-valued maps and unions of two single-valued branches.
fn pl_map() -> impl Strategy<Value = PlMultiMap> {
    prop_oneof![
        envelope().prop_map(|(lo, hi)| PlMultiMap::new(vec![PlBranch::envelope(IntervalSet::unit(), lo, hi)]).unwrap()),
        pl_function().prop_map(PlMultiMap::single_valued),
        (pl_function(), pl_function()).prop_map(|(f, g)| {
            PlMultiMap::new(vec![PlBranch::single(IntervalSet::unit(), f), PlBranch::single(IntervalSet::unit(), g)])
                .unwrap()
        }),
        Just(presets::endpoint_split()),
        Just(presets::opening_band()),
        Just(presets::jump_map()),
    ]
}

fn relation(max_points: usize) -> impl Strategy<Value = FiniteRelation> {
    (1..=max_points)
        .prop_flat_map(|n| prop::collection::vec(1u64..(1 << n), n))
        .prop_map(|masks| {
            let n = masks.len();
            let space = Arc::new(FiniteMetricSpace::discrete(n));
            FiniteRelation::new(space, masks.iter().map(|&m| PointSet::from_mask(n, m)).collect()).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn set_algebra_laws(a in interval_set(), b in interval_set(), c in interval_set()) {
        prop_assert_eq!(a.union(&b), b.union(&a));
        prop_assert_eq!(a.intersect(&b.union(&c)), a.intersect(&b).union(&a.intersect(&c)));
        prop_assert_eq!(a.union(&b).complement(), a.complement().intersect(&b.complement()));
        prop_assert_eq!(a.difference(&b), a.intersect(&b.complement()));
        prop_assert_eq!(a.complement().complement(), a.clone());
        prop_assert_eq!(a.lebesgue() + a.complement().lebesgue(), rat(1, 1));
        prop_assert_eq!(a.union(&b).lebesgue() + a.intersect(&b).lebesgue(), a.lebesgue() + b.lebesgue());
        prop_assert!(a.intersect(&b).is_subset(&a));
        for x in probes() {
            prop_assert_eq!(a.union(&b).contains(&x), a.contains(&x) || b.contains(&x));
            prop_assert_eq!(a.intersect(&b).contains(&x), a.contains(&x) && b.contains(&x));
        }
    }

    #[test]
    fn literals_round_trip(a in interval_set()) {
        let text = a.to_string();
        prop_assert_eq!(text.parse::<IntervalSet>().unwrap(), a);
    }

    #[test]
    fn preimages_match_pointwise_definitions(phi in pl_map(), b in interval_set()) {
        let large = phi.large_preimage(&b);
        let small = phi.small_preimage(&b);
        for x in probes() {
            let value = phi.eval(&x).unwrap();
            prop_assert_eq!(large.contains(&x), !value.intersect(&b).is_empty(), "large at {}", x);
            prop_assert_eq!(small.contains(&x), value.is_subset(&b), "small at {}", x);
        }
    }

    #[test]
    fn preimage_lattice_laws(phi in pl_map(), a in interval_set(), b in interval_set()) {
        prop_assert_eq!(phi.small_preimage(&b), phi.complement(&phi.large_preimage(&phi.complement(&b))));
        prop_assert_eq!(phi.large_preimage(&a.union(&b)), phi.large_preimage(&a).union(&phi.large_preimage(&b)));
        prop_assert_eq!(phi.small_preimage(&a.intersect(&b)), phi.small_preimage(&a).intersect(&phi.small_preimage(&b)));
        prop_assert!(phi.large_preimage(&a.intersect(&b)).is_subset(&phi.large_preimage(&a).intersect(&phi.large_preimage(&b))));
        if a.is_subset(&b) {
            prop_assert!(phi.large_preimage(&a).is_subset(&phi.large_preimage(&b)));
            prop_assert!(phi.small_preimage(&a).is_subset(&phi.small_preimage(&b)));
        }
    }

    #[test]
    fn composition_is_associative(f in relation(5), g_masks in prop::collection::vec(1u64..32, 5), h_masks in prop::collection::vec(1u64..32, 5)) {
        let n = f.len();
        let lift = |masks: &[u64]| {
            let values = masks[..n].iter().map(|&m| {
                let set = PointSet::from_mask(n, m & ((1 << n) - 1));
                if set.is_empty() { PointSet::singleton(n, 0) } else { set }
            }).collect();
            FiniteRelation::new(f.space().clone(), values).unwrap()
        };
        let (g, h) = (lift(&g_masks), lift(&h_masks));
        let left = f.compose(&g).unwrap().compose(&h).unwrap();
        let right = f.compose(&g.compose(&h).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn powers_add_and_pull_back_iteratively(phi in relation(6), a in 0usize..4, b in 0usize..4, mask in 0u64..64) {
        let n = phi.len();
        prop_assert_eq!(phi.power(a + b), phi.power(a).compose(&phi.power(b)).unwrap());
        let set = PointSet::from_mask(n, mask & ((1 << n) - 1));
        prop_assert_eq!(phi.power(a).large_preimage(&set), phi.iterated_large_preimage(&set, a));
    }

    #[test]
    fn envelopes_are_continuous_and_pinches_are_lower_only((lo, hi) in envelope(), k in 1i128..8) {
        let band = PlMultiMap::new(vec![PlBranch::envelope(IntervalSet::unit(), lo.clone(), hi.clone())]).unwrap();
        prop_assert_eq!(band.classify_regularity().class, Regularity::Continuous);
        let x = rat(k, 8);
        let at = IntervalSet::point(x).unwrap();
        let rest = IntervalSet::unit().difference(&at);
        let (l, u) = (lo.eval(&x), hi.eval(&x));
        let pinched = PlMultiMap::new(vec![
            PlBranch::envelope(rest.clone(), lo.clone(), hi.clone()),
            PlBranch::single(at.clone(), PlFunction::constant((l + u) / rat(2, 1)).unwrap()),
        ]).unwrap();
        let expect = if l == u { Regularity::Continuous } else { Regularity::Lsc };
        prop_assert_eq!(pinched.classify_regularity().class, expect);
        let blown = PlMultiMap::new(vec![
            PlBranch::envelope(rest, lo, hi),
            PlBranch::envelope(at, PlFunction::constant(rat(0, 1)).unwrap(), PlFunction::constant(rat(1, 1)).unwrap()),
        ]).unwrap();
        let expect = if l == rat(0, 1) && u == rat(1, 1) { Regularity::Continuous } else { Regularity::Usc };
        prop_assert_eq!(blown.classify_regularity().class, expect);
    }
}

#[test]
fn large_preimage_of_intersection_can_be_strictly_smaller() {
    let phi = presets::endpoint_split();
    let (a, b): (IntervalSet, IntervalSet) = ("{0}".parse().unwrap(), "{1}".parse().unwrap());
    assert!(phi.large_preimage(&a.intersect(&b)).is_empty());
    let both = phi.large_preimage(&a).intersect(&phi.large_preimage(&b));
    assert_eq!(both, "{0, 1}".parse().unwrap());
}

#[test]
fn preset_regularity_table() {
    let expected = [
        ("shifted-tent", Regularity::Continuous),
        ("endpoint-split", Regularity::Usc),
        ("full-interval", Regularity::Continuous),
        ("convex-band", Regularity::Continuous),
        ("identity", Regularity::Continuous),
        ("jump", Regularity::Neither),
        ("two-constants", Regularity::Continuous),
        ("opening-band", Regularity::Lsc),
    ];
    for (name, class) in expected {
        let phi = presets::pl_by_name(name).unwrap();
        assert_eq!(phi.classify_regularity().class, class, "{name}");
    }
}
