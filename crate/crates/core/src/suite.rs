//! Seeded randomized property suites. A run is a pure function of
//! `(suite, seed, count)`; the first failing case is shrunk greedily before it
//! is reported.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::carrier::{FiniteMetricSpace, FiniteRelation, PlBranch, PlFunction, PlMultiMap};
use crate::cover::{iterate_refinement_check, Cover};
use crate::error::{Error, Result};
use crate::interval::IntervalSet;
use crate::invariance::{find_invariant_measure, verify_invariance_bruteforce, verify_invariance_flow};
use crate::measure::PointMeasure;
use crate::orbit::{h_cm_estimate, h_kt_estimate, OrbitConfig};
use crate::partition::{nz_count, partition_entropy, OrderedPartition, ENTROPY_BOUND_SLACK};
use crate::pointset::PointSet;
use crate::selection::{enumerate_selections, pl_selection, sandwich_report, SandwichConfig};
use crate::solver::SolverConfig;
use crate::{rat, Rational};

/// A named suite with its default seed and case count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteInfo {
    pub name: &'static str,
    pub seed: u64,
    pub count: usize,
    pub description: &'static str,
}

pub const SUITES: &[SuiteInfo] = &[
    SuiteInfo {
        name: "entropy-bound",
        seed: 42,
        count: 1000,
        description: "H(P) <= log NZ(P), with equality when the nonzero pieces have equal mass",
    },
    SuiteInfo {
        name: "span-le-sep",
        seed: 7,
        count: 200,
        description: "spanning <= separated counts for orbits and for the bottleneck pseudometric",
    },
    SuiteInfo {
        name: "iterate-refinement",
        seed: 1,
        count: 200,
        description: "the n·k-step pullback join refines the n-step join of the k-th power",
    },
    SuiteInfo {
        name: "invariance-flow",
        seed: 3,
        count: 1000,
        description: "max-flow invariance agrees with subset enumeration; constructed measures are invariant",
    },
    SuiteInfo {
        name: "selection-sandwich",
        seed: 5,
        count: 100,
        description: "every selection has at most the separated orbits of the relation and at least its bottleneck count",
    },
    SuiteInfo {
        name: "pl-selection",
        seed: 11,
        count: 20,
        description: "random convex-valued lower semicontinuous PL maps admit a verified PL selection",
    },
];

pub fn suite_info(name: &str) -> Option<&'static SuiteInfo> {
    SUITES.iter().find(|s| s.name == name)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub case: Value,
    pub message: String,
    pub shrink_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub count: usize,
    pub passed: usize,
    pub failed: usize,
    /// Cases where some count came from a solver fallback instead of an exact search.
    pub inexact: usize,
    pub counterexample: Option<Counterexample>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

/// Result of one case: `Err(message)` on a property failure, otherwise exactness.
type Check = std::result::Result<bool, String>;

trait Case: Clone + Serialize {
    /// Strictly smaller candidates, most aggressive first.
    fn shrink(&self) -> Vec<Self>;
}

fn failure(e: Error) -> String {
    format!("error: {e}")
}

fn run_cases<T: Case>(
    info: (&str, u64, usize),
    mut generate: impl FnMut(&mut ChaCha8Rng) -> T,
    property: impl Fn(&T) -> Check,
) -> SuiteReport {
    let (name, seed, count) = info;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport {
        suite: name.into(),
        seed,
        count,
        passed: 0,
        failed: 0,
        inexact: 0,
        counterexample: None,
    };
    for _ in 0..count {
        let case = generate(&mut rng);
        match property(&case) {
            Ok(exact) => {
                report.passed += 1;
                report.inexact += usize::from(!exact);
            }
            Err(msg) => {
                report.failed += 1;
                if report.counterexample.is_none() {
                    report.counterexample = Some(shrink(case, msg, &property));
                }
            }
        }
    }
    report
}

fn shrink<T: Case>(mut case: T, mut message: String, property: &impl Fn(&T) -> Check) -> Counterexample {
    let mut steps = 0;
    'outer: loop {
        for candidate in case.shrink() {
            if let Err(msg) = property(&candidate) {
                case = candidate;
                message = msg;
                steps += 1;
                continue 'outer;
            }
        }
        break;
    }
    Counterexample {
        case: serde_json::to_value(&case).expect("cases serialize"),
        message,
        shrink_steps: steps,
    }
}

/// Runs a suite; `seed` and `count` default to the suite's own.
pub fn run_suite(name: &str, seed: Option<u64>, count: Option<usize>) -> Result<SuiteReport> {
    let info = suite_info(name).ok_or_else(|| {
        let known: Vec<&str> = SUITES.iter().map(|s| s.name).collect();
        Error::Config(format!("unknown suite {name:?} (known: {})", known.join(", ")))
    })?;
    let key = (info.name, seed.unwrap_or(info.seed), count.unwrap_or(info.count));
    Ok(match info.name {
        "entropy-bound" => run_cases(key, MeasureCase::generate, MeasureCase::check),
        "span-le-sep" => run_cases(key, |r| RelationCase::generate(r, 8, 2), RelationCase::span_le_sep),
        "iterate-refinement" => run_cases(key, CoverCase::generate, CoverCase::check),
        "invariance-flow" => run_cases(key, |r| WeightedCase::generate(r, 6), WeightedCase::check),
        "selection-sandwich" => run_cases(key, |r| RelationCase::generate(r, 5, 3), RelationCase::sandwich),
        "pl-selection" => run_cases(key, PlCase::generate, PlCase::check),
        _ => unreachable!("suite table and dispatch agree"),
    })
}

/// A measure given by integer counts and a partition given by labels.
#[derive(Debug, Clone, Serialize)]
struct MeasureCase {
    counts: Vec<u64>,
    labels: Vec<usize>,
}

impl MeasureCase {
    fn generate(rng: &mut ChaCha8Rng) -> Self {
        let n = rng.random_range(1..=10);
        let k = rng.random_range(1..=n);
        let labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
        let counts = if rng.random_bool(0.3) {
            // one unit of mass on the first point of each chosen piece: equal piece masses
            let mut c = vec![0; n];
            let chosen = rng.random_range(1..=k);
            for piece in 0..chosen {
                c[labels.iter().position(|&l| l == piece).expect("label present")] = 1;
            }
            c
        } else {
            let mut c: Vec<u64> = (0..n).map(|_| rng.random_range(0..=6)).collect();
            c[0] += 1;
            c
        };
        MeasureCase { counts, labels }
    }

    fn check(&self) -> Check {
        let mu = PointMeasure::from_counts(&self.counts).map_err(failure)?;
        let p = OrderedPartition::from_labels(&self.labels);
        let h = partition_entropy(&mu, &p).map_err(failure)?;
        let nz = nz_count(&mu, &p);
        let bound = (nz as f64).ln();
        if h > bound + ENTROPY_BOUND_SLACK {
            return Err(format!("H = {h} exceeds log NZ = {bound}"));
        }
        let masses: Vec<Rational> = p.pieces().iter().map(|s| mu_mass(&mu, s)).filter(|m| *m > rat(0, 1)).collect();
        if masses.windows(2).all(|w| w[0] == w[1]) && (h - bound).abs() > ENTROPY_BOUND_SLACK {
            return Err(format!("equal piece masses but H = {h} differs from log NZ = {bound}"));
        }
        Ok(true)
    }
}

fn mu_mass(mu: &PointMeasure, s: &PointSet) -> Rational {
    s.iter().map(|i| mu.weight(i)).sum()
}

impl Case for MeasureCase {
    fn shrink(&self) -> Vec<Self> {
        let mut out = Vec::new();
        for i in 0..self.counts.len() {
            if self.counts.len() > 1 {
                let mut c = self.clone();
                c.counts.remove(i);
                c.labels.remove(i);
                if c.counts.iter().any(|&x| x > 0) {
                    out.push(c);
                }
            }
            if self.counts[i] > 1 {
                let mut c = self.clone();
                c.counts[i] -= 1;
                out.push(c);
            }
        }
        out
    }
}

/// A relation on points of `[0, 1]` with the line metric.
#[derive(Debug, Clone, Serialize)]
struct RelationCase {
    points: Vec<String>,
    images: Vec<Vec<usize>>,
    eps: Vec<String>,
    depth: usize,
}

fn line_space(points: &[String]) -> std::result::Result<Arc<FiniteMetricSpace>, String> {
    let xs: Vec<Rational> = points.iter().map(|s| crate::interval::parse_rational(s)).collect::<Result<_>>().map_err(failure)?;
    Ok(Arc::new(FiniteMetricSpace::on_line(&xs).map_err(failure)?))
}

fn random_images(rng: &mut ChaCha8Rng, n: usize, max_out: usize) -> Vec<Vec<usize>> {
    (0..n)
        .map(|_| {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(rng);
            let mut img: Vec<usize> = all.into_iter().take(rng.random_range(1..=max_out.min(n))).collect();
            img.sort_unstable();
            img
        })
        .collect()
}

/// Points `i/8` for a random subset of size `n` of `0..=8`.
fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    let mut grid: Vec<i128> = (0..=8).collect();
    grid.shuffle(rng);
    let mut chosen: Vec<i128> = grid.into_iter().take(n).collect();
    chosen.sort_unstable();
    chosen.into_iter().map(|i| rat(i, 8).to_string()).collect()
}

impl RelationCase {
    fn generate(rng: &mut ChaCha8Rng, max_points: usize, max_out: usize) -> Self {
        let n = rng.random_range(1..=max_points);
        let ladder = ["1/8", "1/4", "1/2"];
        let eps: Vec<String> = ladder.iter().filter(|_| rng.random_bool(0.5)).map(|s| s.to_string()).collect();
        RelationCase {
            points: random_points(rng, n),
            images: random_images(rng, n, max_out),
            eps: if eps.is_empty() { vec!["1/4".into()] } else { eps },
            depth: rng.random_range(1..=5),
        }
    }

    fn relation(&self) -> std::result::Result<FiniteRelation, String> {
        FiniteRelation::from_lists(line_space(&self.points)?, &self.images).map_err(failure)
    }

    fn ladder(&self) -> std::result::Result<Vec<Rational>, String> {
        self.eps.iter().map(|s| crate::interval::parse_rational(s)).collect::<Result<_>>().map_err(failure)
    }

    fn span_le_sep(&self) -> Check {
        let phi = self.relation()?;
        let ladder = self.ladder()?;
        let cfg = OrbitConfig::default();
        let mut exact = true;
        for oe in [
            h_kt_estimate(&phi, &ladder, self.depth, &cfg).map_err(failure)?,
            h_cm_estimate(&phi, &ladder, self.depth, &cfg).map_err(failure)?,
        ] {
            for r in &oe.rows {
                exact &= r.exact;
                if r.r > r.s {
                    return Err(format!("{:?}: r = {} > s = {} at eps = {}, n = {}", oe.family, r.r, r.s, r.eps, r.n));
                }
            }
        }
        Ok(exact)
    }

    fn sandwich(&self) -> Check {
        let phi = self.relation()?;
        let ladder = self.ladder()?;
        let depth = self.depth.min(3);
        let cfg = SandwichConfig::default();
        for f in enumerate_selections(&phi, cfg.selection_cap, cfg.seed) {
            if !phi.admits_selection(&f) {
                return Err(format!("enumerated map {f:?} is not a selection"));
            }
        }
        let r = sandwich_report(&phi, &[], &[], &ladder, depth, &cfg).map_err(failure)?;
        if let Some(v) = r.violations().next() {
            return Err(format!("{} violated at {}: {} > {}", v.name, v.level, v.lhs, v.rhs));
        }
        Ok(r.table.iter().all(|q| q.exact))
    }
}

impl Case for RelationCase {
    fn shrink(&self) -> Vec<Self> {
        let n = self.points.len();
        let mut out = Vec::new();
        if self.depth > 1 {
            out.push(RelationCase { depth: self.depth - 1, ..self.clone() });
        }
        if self.eps.len() > 1 {
            for i in 0..self.eps.len() {
                let mut c = self.clone();
                c.eps.remove(i);
                out.push(c);
            }
        }
        for drop in (0..n).filter(|_| n > 1) {
            let remap = |y: usize| if y > drop { y - 1 } else { y };
            let images: Vec<Vec<usize>> = self
                .images
                .iter()
                .enumerate()
                .filter(|&(x, _)| x != drop)
                .map(|(_, img)| img.iter().filter(|&&y| y != drop).map(|&y| remap(y)).collect())
                .collect();
            if images.iter().all(|img: &Vec<usize>| !img.is_empty()) {
                let mut points = self.points.clone();
                points.remove(drop);
                out.push(RelationCase { points, images, ..self.clone() });
            }
        }
        for x in 0..n {
            for k in (0..self.images[x].len()).filter(|_| self.images[x].len() > 1) {
                let mut c = self.clone();
                c.images[x].remove(k);
                out.push(c);
            }
        }
        out
    }
}

/// A relation on the discrete space with integer weights.
#[derive(Debug, Clone, Serialize)]
struct WeightedCase {
    images: Vec<Vec<usize>>,
    counts: Vec<u64>,
}

impl WeightedCase {
    fn generate(rng: &mut ChaCha8Rng, max_points: usize) -> Self {
        let n = rng.random_range(1..=max_points);
        let max_out = rng.random_range(1..=n);
        let mut counts: Vec<u64> = (0..n).map(|_| rng.random_range(0..=4)).collect();
        counts[rng.random_range(0..n)] += 1;
        WeightedCase {
            images: random_images(rng, n, max_out),
            counts,
        }
    }

    fn check(&self) -> Check {
        let space = Arc::new(FiniteMetricSpace::discrete(self.images.len()));
        let phi = FiniteRelation::from_lists(space, &self.images).map_err(failure)?;
        let mu = PointMeasure::from_counts(&self.counts).map_err(failure)?;
        let brute = verify_invariance_bruteforce(&mu, &phi).map_err(failure)?;
        let flow = verify_invariance_flow(&mu, &phi).map_err(failure)?;
        if brute.invariant != flow.invariant {
            return Err(format!("bruteforce says {}, flow says {}", brute.invariant, flow.invariant));
        }
        let inv = find_invariant_measure(&phi).map_err(failure)?;
        if !verify_invariance_bruteforce(&inv, &phi).map_err(failure)?.invariant {
            return Err(format!("constructed measure {:?} is not invariant", inv.weights()));
        }
        Ok(true)
    }
}

impl Case for WeightedCase {
    fn shrink(&self) -> Vec<Self> {
        let n = self.images.len();
        let mut out = Vec::new();
        for drop in (0..n).filter(|_| n > 1) {
            let remap = |y: usize| if y > drop { y - 1 } else { y };
            let images: Vec<Vec<usize>> = self
                .images
                .iter()
                .enumerate()
                .filter(|&(x, _)| x != drop)
                .map(|(_, img)| img.iter().filter(|&&y| y != drop).map(|&y| remap(y)).collect())
                .collect();
            let mut counts = self.counts.clone();
            counts.remove(drop);
            if images.iter().all(|img: &Vec<usize>| !img.is_empty()) && counts.iter().any(|&c| c > 0) {
                out.push(WeightedCase { images, counts });
            }
        }
        for x in 0..n {
            for k in (0..self.images[x].len()).filter(|_| self.images[x].len() > 1) {
                let mut c = self.clone();
                c.images[x].remove(k);
                out.push(c);
            }
            if self.counts[x] > 1 {
                let mut c = self.clone();
                c.counts[x] -= 1;
                out.push(c);
            }
        }
        out
    }
}

/// A relation, a cover of its points, and the depths of the iterate comparison.
#[derive(Debug, Clone, Serialize)]
struct CoverCase {
    images: Vec<Vec<usize>>,
    cover: Vec<Vec<usize>>,
    n: usize,
    k: usize,
}

impl CoverCase {
    fn generate(rng: &mut ChaCha8Rng) -> Self {
        let points = rng.random_range(1..=6);
        let max_out = rng.random_range(1..=points.min(3));
        let members = rng.random_range(1..=4);
        let mut cover: Vec<Vec<usize>> = (0..members)
            .map(|_| (0..points).filter(|_| rng.random_bool(0.4)).collect())
            .collect();
        for x in 0..points {
            if !cover.iter().any(|m| m.contains(&x)) {
                let m = rng.random_range(0..members);
                cover[m].push(x);
                cover[m].sort_unstable();
            }
        }
        CoverCase {
            images: random_images(rng, points, max_out),
            cover,
            n: rng.random_range(1..=3),
            k: rng.random_range(1..=3),
        }
    }

    fn check(&self) -> Check {
        let points = self.images.len();
        let phi = FiniteRelation::from_lists(Arc::new(FiniteMetricSpace::discrete(points)), &self.images).map_err(failure)?;
        let members = self.cover.iter().map(|m| PointSet::from_indices(points, m.iter().copied())).collect();
        let a = Cover::new(&phi, members).map_err(failure)?;
        let r = iterate_refinement_check(&phi, &a, self.n, self.k, &SolverConfig::default()).map_err(failure)?;
        if !r.holds() {
            return Err(format!(
                "refines = {}, coarse minimum {} vs fine minimum {}",
                r.refines, r.coarse_min, r.fine_min
            ));
        }
        Ok(r.exact)
    }
}

impl Case for CoverCase {
    fn shrink(&self) -> Vec<Self> {
        let mut out = Vec::new();
        if self.n > 1 {
            out.push(CoverCase { n: self.n - 1, ..self.clone() });
        }
        if self.k > 1 {
            out.push(CoverCase { k: self.k - 1, ..self.clone() });
        }
        for i in (0..self.cover.len()).filter(|_| self.cover.len() > 1) {
            let mut c = self.clone();
            c.cover.remove(i);
            out.push(c);
        }
        for x in 0..self.images.len() {
            for k in (0..self.images[x].len()).filter(|_| self.images[x].len() > 1) {
                let mut c = self.clone();
                c.images[x].remove(k);
                out.push(c);
            }
        }
        out
    }
}

/// A convex-valued envelope map on the grid `{i/4}` knots, optionally with its
/// value pinched to a single point at one grid abscissa (still l.s.c.).
#[derive(Debug, Clone, Serialize)]
struct PlCase {
    lower: Vec<(String, String)>,
    upper: Vec<(String, String)>,
    pinch: Option<(String, String)>,
}

impl PlCase {
    fn generate(rng: &mut ChaCha8Rng) -> Self {
        let xs: Vec<Rational> = (0..=4).map(|i| rat(i, 4)).collect();
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for x in &xs {
            let a = rat(rng.random_range(0..=8), 8);
            let b = rat(rng.random_range(0..=8), 8);
            lower.push((x.to_string(), a.min(b).to_string()));
            upper.push((x.to_string(), a.max(b).to_string()));
        }
        let pinch = rng.random_bool(0.5).then(|| {
            let i = rng.random_range(0..xs.len());
            let lo = crate::interval::parse_rational(&lower[i].1).expect("generated");
            let hi = crate::interval::parse_rational(&upper[i].1).expect("generated");
            (xs[i].to_string(), ((lo + hi) / rat(2, 1)).to_string())
        });
        PlCase { lower, upper, pinch }
    }

    fn map(&self) -> Result<PlMultiMap> {
        let parse = |k: &[(String, String)]| -> Result<PlFunction> {
            PlFunction::new(
                k.iter()
                    .map(|(x, y)| Ok((crate::interval::parse_rational(x)?, crate::interval::parse_rational(y)?)))
                    .collect::<Result<Vec<_>>>()?,
            )
        };
        let (lower, upper) = (parse(&self.lower)?, parse(&self.upper)?);
        match &self.pinch {
            None => PlMultiMap::new(vec![PlBranch::envelope(IntervalSet::unit(), lower, upper)]),
            Some((x, y)) => {
                let x = crate::interval::parse_rational(x)?;
                let y = crate::interval::parse_rational(y)?;
                let at = IntervalSet::point(x)?;
                PlMultiMap::new(vec![
                    PlBranch::envelope(IntervalSet::unit().difference(&at), lower, upper),
                    PlBranch::single(at, PlFunction::constant(y)?),
                ])
            }
        }
    }

    fn check(&self) -> Check {
        let phi = self.map().map_err(failure)?;
        let f = pl_selection(&phi).map_err(failure)?;
        for i in 0..=64 {
            let x = rat(i, 64);
            if !phi.eval(&x).map_err(failure)?.contains(&f.eval(&x)) {
                return Err(format!("selection leaves the map at {x}"));
            }
        }
        Ok(true)
    }
}

impl Case for PlCase {
    fn shrink(&self) -> Vec<Self> {
        match self.pinch {
            Some(_) => vec![PlCase { pinch: None, ..self.clone() }],
            None => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_at_small_counts() {
        for info in SUITES {
            let r = run_suite(info.name, None, Some(15)).unwrap();
            assert!(r.ok(), "{}: {:?}", info.name, r.counterexample);
            assert_eq!(r.passed, 15);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = serde_json::to_string(&run_suite("span-le-sep", Some(3), Some(10)).unwrap()).unwrap();
        let b = serde_json::to_string(&run_suite("span-le-sep", Some(3), Some(10)).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_suite_is_config_error() {
        assert!(matches!(run_suite("nope", None, None), Err(Error::Config(_))));
    }

    #[test]
    fn shrinking_reaches_a_minimal_case() {
        // a deliberately false property: "no relation has a point with two successors"
        let property = |c: &WeightedCase| -> Check {
            if c.images.iter().any(|img| img.len() > 1) {
                Err("branching point".into())
            } else {
                Ok(true)
            }
        };
        let case = WeightedCase {
            images: vec![vec![0, 1, 2], vec![1, 2], vec![0]],
            counts: vec![3, 1, 2],
        };
        let cx = shrink(case, "branching point".into(), &property);
        let images: Vec<Vec<usize>> = serde_json::from_value(cx.case["images"].clone()).unwrap();
        assert_eq!(images.len(), 2);
        assert_eq!(images.iter().map(Vec::len).max(), Some(2));
        assert!(cx.shrink_steps > 0);
    }

    #[test]
    fn relation_shrink_keeps_valid_relations() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let c = RelationCase::generate(&mut rng, 6, 3);
            for s in c.shrink() {
                assert!(s.relation().is_ok());
            }
        }
    }
}
