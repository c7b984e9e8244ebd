//! Named maps used by the scenarios, the demo and the tests.

use std::sync::Arc;

use crate::carrier::{FiniteMetricSpace, FiniteRelation, PlBranch, PlFunction, PlMultiMap};
use crate::interval::IntervalSet;
use crate::rat;

/// `f(x) = x + 1/4` on `[0, 1/2]`, `f(x) = 5/4 − x` on `(1/2, 1]`.
pub fn shifted_tent() -> PlMultiMap {
    let f = PlFunction::new(vec![
        (rat(0, 1), rat(1, 4)),
        (rat(1, 2), rat(3, 4)),
        (rat(1, 1), rat(1, 4)),
    ])
    .expect("valid knots");
    PlMultiMap::single_valued(f)
}

/// `φ(x) = {0, 1}` for `x ∈ {0, 1}`, `φ(x) = {x}` on `(0, 1)`.
pub fn endpoint_split() -> PlMultiMap {
    let ends: IntervalSet = "{0, 1}".parse().expect("literal");
    PlMultiMap::new(vec![
        PlBranch::single("(0,1)".parse().expect("literal"), PlFunction::identity()),
        PlBranch::single(ends.clone(), PlFunction::constant(rat(0, 1)).expect("in range")),
        PlBranch::single(ends, PlFunction::constant(rat(1, 1)).expect("in range")),
    ])
    .expect("domains cover [0,1]")
}

/// `φ(x) = [0, 1]` everywhere.
pub fn full_interval_map() -> PlMultiMap {
    PlMultiMap::new(vec![PlBranch::envelope(
        IntervalSet::unit(),
        PlFunction::constant(rat(0, 1)).expect("in range"),
        PlFunction::constant(rat(1, 1)).expect("in range"),
    )])
    .expect("covers [0,1]")
}

/// `φ(x) = [x/2, x/2 + 1/2]`.
pub fn convex_band() -> PlMultiMap {
    PlMultiMap::new(vec![PlBranch::envelope(
        IntervalSet::unit(),
        PlFunction::affine(rat(1, 2), rat(0, 1)).expect("in range"),
        PlFunction::affine(rat(1, 2), rat(1, 2)).expect("in range"),
    )])
    .expect("covers [0,1]")
}

pub fn identity_map() -> PlMultiMap {
    PlMultiMap::single_valued(PlFunction::identity())
}

/// `1/4` on `[0, 1/2)`, `3/4` on `[1/2, 1]`: single-valued but discontinuous.
pub fn jump_map() -> PlMultiMap {
    PlMultiMap::new(vec![
        PlBranch::single("[0,1/2)".parse().expect("literal"), PlFunction::constant(rat(1, 4)).expect("in range")),
        PlBranch::single("[1/2,1]".parse().expect("literal"), PlFunction::constant(rat(3, 4)).expect("in range")),
    ])
    .expect("domains cover [0,1]")
}

/// `φ(x) = {1/4, 3/4}`: continuous with non-convex values.
pub fn two_constants() -> PlMultiMap {
    PlMultiMap::new(vec![
        PlBranch::single(IntervalSet::unit(), PlFunction::constant(rat(1, 4)).expect("in range")),
        PlBranch::single(IntervalSet::unit(), PlFunction::constant(rat(3, 4)).expect("in range")),
    ])
    .expect("covers [0,1]")
}

/// `φ(0) = {0}`, `φ(x) = [0, 1]` for `x > 0`: lower but not upper semicontinuous.
pub fn opening_band() -> PlMultiMap {
    PlMultiMap::new(vec![
        PlBranch::single("{0}".parse().expect("literal"), PlFunction::constant(rat(0, 1)).expect("in range")),
        PlBranch::envelope(
            "(0,1]".parse().expect("literal"),
            PlFunction::constant(rat(0, 1)).expect("in range"),
            PlFunction::constant(rat(1, 1)).expect("in range"),
        ),
    ])
    .expect("domains cover [0,1]")
}

/// Full relation on `m` points at mutual distance 1.
pub fn full_shift(m: usize) -> FiniteRelation {
    FiniteRelation::full(Arc::new(FiniteMetricSpace::discrete(m)))
}

/// `0 → {1}, 1 → {1}` on two points at distance 1.
pub fn shift_like() -> FiniteRelation {
    FiniteRelation::from_lists(Arc::new(FiniteMetricSpace::discrete(2)), &[vec![1], vec![1]])
        .expect("valid relation")
}

/// `0 → {1}, 1 → {0}`.
pub fn two_cycle() -> FiniteRelation {
    FiniteRelation::from_function(Arc::new(FiniteMetricSpace::discrete(2)), &[1, 0])
        .expect("valid relation")
}

/// Names accepted by [`pl_by_name`].
pub const PL_PRESETS: &[&str] = &[
    "shifted-tent",
    "endpoint-split",
    "full-interval",
    "convex-band",
    "identity",
    "jump",
    "two-constants",
    "opening-band",
];

pub fn pl_by_name(name: &str) -> Option<PlMultiMap> {
    Some(match name {
        "shifted-tent" | "tent" => shifted_tent(),
        "endpoint-split" => endpoint_split(),
        "full-interval" => full_interval_map(),
        "convex-band" => convex_band(),
        "identity" => identity_map(),
        "jump" => jump_map(),
        "two-constants" => two_constants(),
        "opening-band" => opening_band(),
        _ => return None,
    })
}
