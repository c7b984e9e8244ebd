//! Single-valued selections `f(x) ∈ φ(x)`: exhaustive enumeration on finite
//! carriers, a constructive continuous selection on convex-valued PL maps, and
//! the level-wise comparison of entropies of `φ` and its selections.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::carrier::{FiniteRelation, PlFunction, PlMultiMap, Regularity};
use crate::cover::{ball_cover_finite, h_plus_estimate, CoverEntropy};
use crate::error::{Error, Result};
use crate::estimate::{self, to_csv, EntropyEstimate};
use crate::measure::PointMeasure;
use crate::orbit::{h_cm_estimate, h_kt_estimate, OrbitConfig, OrbitEntropy};
use crate::partition::{metric_entropy_estimate, MetricEntropy, OrderedPartition};
use crate::pointset::PointSet;
use crate::Rational;

pub const DEFAULT_SELECTION_CAP: u64 = 1_000_000;

/// Number of distinct selections drawn when the product of value sizes exceeds the cap.
pub const SAMPLE_SIZE: usize = 1000;

/// Slack for comparing rates computed in floating point.
const RATE_SLACK: f64 = 1e-12;

enum Source {
    Odometer { choices: Vec<Vec<usize>>, index: Vec<usize>, done: bool },
    Sampled(std::vec::IntoIter<Vec<usize>>),
}

/// Selections of a finite relation as point maps `f[x] ∈ φ(x)`.
pub struct Selections {
    /// `Π |φ(x)|`, saturating.
    pub total: u128,
    /// The cap was exceeded and only a seeded sample is produced (sorted).
    pub sampled: bool,
    source: Source,
}

impl Iterator for Selections {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        match &mut self.source {
            Source::Sampled(it) => it.next(),
            Source::Odometer { choices, index, done } => {
                if *done {
                    return None;
                }
                let out = index.iter().zip(choices.iter()).map(|(&i, c)| c[i]).collect();
                // advance the last coordinate first, giving lexicographic order
                *done = true;
                for pos in (0..index.len()).rev() {
                    index[pos] += 1;
                    if index[pos] < choices[pos].len() {
                        *done = false;
                        break;
                    }
                    index[pos] = 0;
                }
                Some(out)
            }
        }
    }
}

/// All selections in lexicographic order when `Π |φ(x)| ≤ cap`; otherwise
/// `min(cap, SAMPLE_SIZE)` distinct selections drawn from `seed`.
pub fn enumerate_selections(phi: &FiniteRelation, cap: u64, seed: u64) -> Selections {
    let choices: Vec<Vec<usize>> = phi.values().iter().map(|v| v.iter().collect()).collect();
    let total = choices.iter().fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128));
    if total <= cap as u128 {
        let index = vec![0; choices.len()];
        return Selections {
            total,
            sampled: false,
            source: Source::Odometer { choices, index, done: false },
        };
    }
    let want = (cap as usize).min(SAMPLE_SIZE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(want);
    while seen.len() < want {
        let f: Vec<usize> = choices.iter().map(|c| c[rng.random_range(0..c.len())]).collect();
        seen.insert(f);
    }
    let mut sample: Vec<Vec<usize>> = seen.into_iter().collect();
    sample.sort();
    Selections {
        total,
        sampled: true,
        source: Source::Sampled(sample.into_iter()),
    }
}

fn hull_midpoint(phi: &PlMultiMap, x: &Rational) -> Result<Rational> {
    let (lo, hi) = phi.eval(x)?.hull().expect("values are nonempty");
    Ok((lo + hi) / Rational::from_integer(2))
}

/// A continuous PL selection of an l.s.c. map with convex values.
///
/// Probes are the breakpoints, the envelope crossings and the midpoints between
/// consecutive ones. Between consecutive probes the active branches and their
/// order are fixed, so convexity at the probes gives convexity everywhere and
/// `φ(x) = [L(x), U(x)]` with `L`, `U` affine on each gap. The selection takes
/// the value midpoint at every probe and interpolates linearly; the region
/// between `L` and `U` is convex, and lower semicontinuity puts the endpoint
/// values inside its closure, so the interpolant stays in `φ`.
pub fn pl_selection(phi: &PlMultiMap) -> Result<PlFunction> {
    let report = phi.classify_regularity();
    if !matches!(report.class, Regularity::Lsc | Regularity::Continuous) {
        let at: Vec<String> = report.lsc_failures.iter().map(ToString::to_string).collect();
        return Err(Error::SelectionHypotheses(format!(
            "map is not lower semicontinuous (fails at {})",
            at.join(", ")
        )));
    }
    let mut xs = phi.breakpoints();
    xs.extend(phi.envelope_crossings());
    xs.sort();
    xs.dedup();
    let two = Rational::from_integer(2);
    let mids: Vec<Rational> = xs.windows(2).map(|w| (w[0] + w[1]) / two).collect();
    xs.extend(mids);
    xs.sort();
    for x in &xs {
        let v = phi.eval(x)?;
        if v.pieces().len() != 1 {
            return Err(Error::SelectionHypotheses(format!("value {v} at {x} is not convex")));
        }
    }
    let mut knots: Vec<(Rational, Rational)> = Vec::with_capacity(xs.len());
    for x in xs {
        let y = hull_midpoint(phi, &x)?;
        // drop the middle of three collinear knots
        if knots.len() >= 2 {
            let (x0, y0) = knots[knots.len() - 2];
            let (x1, y1) = knots[knots.len() - 1];
            if (y1 - y0) * (x - x0) == (y - y0) * (x1 - x0) {
                knots.pop();
            }
        }
        knots.push((x, y));
    }
    let f = PlFunction::new(knots)?;
    verify_pl_selection(phi, &f)?;
    Ok(f)
}

/// Checks `f(x) ∈ φ(x)` at every knot of `f`, every piece midpoint, and every breakpoint of `φ`.
pub fn verify_pl_selection(phi: &PlMultiMap, f: &PlFunction) -> Result<()> {
    let two = Rational::from_integer(2);
    let knots: Vec<Rational> = f.knot_xs().collect();
    let probes = knots
        .iter()
        .copied()
        .chain(knots.windows(2).map(|w| (w[0] + w[1]) / two))
        .chain(phi.breakpoints());
    for x in probes {
        let y = f.eval(&x);
        if !phi.eval(&x)?.contains(&y) {
            return Err(Error::Domain(format!("selection value {y} at {x} lies outside the map")));
        }
    }
    Ok(())
}

/// Topological entropy of a single-valued map: for each `n`, the largest
/// separated-orbit rate over the ladder.
pub fn selection_entropy(f: &FiniteRelation, eps_ladder: &[Rational], depth: usize, cfg: &OrbitConfig) -> Result<EntropyEstimate> {
    if !f.is_single_valued() {
        return Err(Error::Domain("selection entropy needs a single-valued map".into()));
    }
    if eps_ladder.is_empty() {
        return Err(Error::Config("empty ε ladder".into()));
    }
    let kt = h_kt_estimate(f, eps_ladder, depth, cfg)?;
    let levels = (1..=depth)
        .map(|n| {
            let rows = kt.rows.iter().filter(|r| r.n == n);
            rows.fold((0.0f64, true), |(v, e), r| (v.max(r.sep_rate), e && r.exact))
        })
        .collect();
    let ladder: Vec<String> = eps_ladder.iter().map(ToString::to_string).collect();
    Ok(EntropyEstimate::from_levels(
        levels,
        estimate::params([("eps_ladder", ladder.join(" ")), ("depth", depth.to_string())]),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
    Indeterminate,
}

/// One inequality `lhs ≤ rhs` evaluated at one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityRecord {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub level: String,
    pub verdict: Verdict,
    /// Exact finite-level statement; a failure is a real violation. Otherwise a
    /// diagnostic of an asymptotic claim, which can only be indeterminate.
    pub asserted: bool,
}

/// One tabulated value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantityRow {
    pub quantity: String,
    pub level: String,
    pub value: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub selections: usize,
    pub sampled: bool,
    pub table: Vec<QuantityRow>,
    pub records: Vec<InequalityRecord>,
}

impl SandwichReport {
    /// No asserted inequality is violated.
    pub fn asserted_hold(&self) -> bool {
        self.records.iter().all(|r| !r.asserted || r.verdict != Verdict::Violated)
    }

    pub fn violations(&self) -> impl Iterator<Item = &InequalityRecord> {
        self.records.iter().filter(|r| r.verdict == Verdict::Violated)
    }

    pub fn records_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .records
            .iter()
            .map(|r| {
                vec![
                    r.name.clone(),
                    r.level.clone(),
                    r.lhs.to_string(),
                    r.rhs.to_string(),
                    format!("{:?}", r.verdict).to_lowercase(),
                    r.asserted.to_string(),
                ]
            })
            .collect();
        to_csv(&["name", "level", "lhs", "rhs", "verdict", "asserted"], &rows)
    }

    pub fn table_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .table
            .iter()
            .map(|q| vec![q.quantity.clone(), q.level.clone(), q.value.to_string(), q.exact.to_string()])
            .collect();
        to_csv(&["quantity", "level", "value", "exact"], &rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SandwichConfig {
    pub orbit: OrbitConfig,
    pub selection_cap: u64,
    pub seed: u64,
}

impl Default for SandwichConfig {
    fn default() -> Self {
        SandwichConfig {
            orbit: OrbitConfig::default(),
            selection_cap: DEFAULT_SELECTION_CAP,
            seed: 0,
        }
    }
}

/// Level-wise aggregates over all selections: maxima and minima of counts and rates.
#[derive(Default)]
struct Extremes {
    kt_s_max: Vec<usize>,
    cm_s_min: Vec<usize>,
    rate_min: Vec<f64>,
    rate_max: Vec<f64>,
    exact: Vec<bool>,
    metric_min: Vec<f64>,
    metric_max: Vec<f64>,
}

impl Extremes {
    fn new(levels: usize, metric_levels: usize) -> Self {
        Extremes {
            kt_s_max: vec![0; levels],
            cm_s_min: vec![usize::MAX; levels],
            rate_min: vec![f64::INFINITY; levels],
            rate_max: vec![0.0; levels],
            exact: vec![true; levels],
            metric_min: vec![f64::INFINITY; metric_levels],
            metric_max: vec![f64::NEG_INFINITY; metric_levels],
        }
    }
}

fn record(name: &str, lhs: f64, rhs: f64, level: String, asserted: bool, decidable: bool) -> InequalityRecord {
    let ok = lhs <= rhs + if asserted { 0.0 } else { RATE_SLACK };
    let verdict = match (ok, asserted && decidable) {
        (true, _) => Verdict::Holds,
        (false, true) => Verdict::Violated,
        (false, false) => Verdict::Indeterminate,
    };
    InequalityRecord {
        name: name.into(),
        lhs,
        rhs,
        level,
        verdict,
        asserted,
    }
}

/// Every entropy of `φ` and of its selections on the common grid of levels,
/// with each known inequality evaluated level by level.
pub fn sandwich_report(
    phi: &FiniteRelation,
    measures: &[PointMeasure],
    partitions: &[OrderedPartition<PointSet>],
    eps_ladder: &[Rational],
    depth: usize,
    cfg: &SandwichConfig,
) -> Result<SandwichReport> {
    if eps_ladder.is_empty() {
        return Err(Error::Config("empty ε ladder".into()));
    }
    let ocfg = &cfg.orbit;
    let kt = h_kt_estimate(phi, eps_ladder, depth, ocfg)?;
    let cm = h_cm_estimate(phi, eps_ladder, depth, ocfg)?;
    let plus: Vec<CoverEntropy> = eps_ladder
        .iter()
        .map(|e| h_plus_estimate(phi, &ball_cover_finite(phi, e)?, depth, &ocfg.solver))
        .collect::<Result<_>>()?;
    let mut metric: Vec<(String, MetricEntropy)> = Vec::new();
    for (i, mu) in measures.iter().enumerate() {
        for (j, p) in partitions.iter().enumerate() {
            metric.push((format!("mu={i},P={j}"), metric_entropy_estimate(mu, phi, p, depth)?));
        }
    }
    let level_count = kt.rows.len();
    let mut ext = Extremes::new(level_count, metric.len() * depth);
    let selections = enumerate_selections(phi, cfg.selection_cap, cfg.seed);
    let sampled = selections.sampled;
    let mut count = 0;
    for f in selections {
        count += 1;
        let f = FiniteRelation::from_function(phi.space().clone(), &f)?;
        let fkt = h_kt_estimate(&f, eps_ladder, depth, ocfg)?;
        let fcm = h_cm_estimate(&f, eps_ladder, depth, ocfg)?;
        for (k, (a, b)) in fkt.rows.iter().zip(&fcm.rows).enumerate() {
            ext.kt_s_max[k] = ext.kt_s_max[k].max(a.s);
            ext.cm_s_min[k] = ext.cm_s_min[k].min(b.s);
            ext.rate_min[k] = ext.rate_min[k].min(a.sep_rate);
            ext.rate_max[k] = ext.rate_max[k].max(a.sep_rate);
            ext.exact[k] &= a.exact && b.exact;
        }
        let mut k = 0;
        for mu in measures {
            for p in partitions {
                for row in metric_entropy_estimate(mu, &f, p, depth)?.rows {
                    ext.metric_min[k] = ext.metric_min[k].min(row.rate);
                    ext.metric_max[k] = ext.metric_max[k].max(row.rate);
                    k += 1;
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::Domain("relation has no selections".into()));
    }

    let mut table = Vec::new();
    let mut records = Vec::new();
    let orbit_level = |e: &Rational, n: usize| format!("eps={e},n={n}");
    let push_orbit = |table: &mut Vec<QuantityRow>, name: &str, oe: &OrbitEntropy| {
        for r in &oe.rows {
            let level = orbit_level(&r.eps, r.n);
            table.push(QuantityRow { quantity: format!("{name}^sep"), level: level.clone(), value: r.sep_rate, exact: r.exact });
            table.push(QuantityRow { quantity: format!("{name}^spa"), level, value: r.span_rate, exact: r.exact });
        }
    };
    push_orbit(&mut table, "h_KT(phi)", &kt);
    push_orbit(&mut table, "h_CM(phi)", &cm);
    for (k, r) in kt.rows.iter().enumerate() {
        let level = orbit_level(&r.eps, r.n);
        let idx = eps_ladder.iter().position(|e| *e == r.eps).expect("row from ladder");
        let p = &plus[idx].rows[r.n - 1];
        let c = &cm.rows[k];
        let exact = ext.exact[k];
        table.push(QuantityRow { quantity: "h_plus(phi)".into(), level: level.clone(), value: p.rate, exact: p.exact });
        table.push(QuantityRow { quantity: "h(f) min".into(), level: level.clone(), value: ext.rate_min[k], exact });
        table.push(QuantityRow { quantity: "h(f) max".into(), level: level.clone(), value: ext.rate_max[k], exact });

        // an inexact separated count is only a lower bound, so comparisons can't be settled
        records.push(record("s_KT(f) <= s_KT(phi)", ext.kt_s_max[k] as f64, r.s as f64, level.clone(), true, exact && r.exact));
        records.push(record("s_CM(phi) <= s_CM(f)", c.s as f64, ext.cm_s_min[k] as f64, level.clone(), true, exact && c.exact));
        records.push(record("r_KT(phi) <= s_KT(phi)", r.r as f64, r.s as f64, level.clone(), true, r.exact));
        records.push(record("r_CM(phi) <= s_CM(phi)", c.r as f64, c.s as f64, level.clone(), true, c.exact));
        records.push(record("h_plus(phi) <= h(f)", p.rate, ext.rate_min[k], level.clone(), false, false));
        records.push(record("h_CM^sep(phi) <= h(f)", c.sep_rate, ext.rate_min[k], level.clone(), false, false));
        records.push(record("h_CM^spa(phi) <= h(f)", c.span_rate, ext.rate_min[k], level.clone(), false, false));
        records.push(record("h_plus(phi) <= h_KT(phi)", p.rate, r.sep_rate, level, false, false));
    }
    let finest = eps_ladder.iter().enumerate().min_by_key(|(_, e)| **e).map(|(i, _)| i).expect("nonempty ladder");
    let mut k = 0;
    for (label, me) in &metric {
        for row in &me.rows {
            let level = format!("{label},n={}", row.n);
            table.push(QuantityRow { quantity: "h_mu(phi)".into(), level: level.clone(), value: row.rate, exact: true });
            table.push(QuantityRow { quantity: "h_mu(f) min".into(), level: level.clone(), value: ext.metric_min[k], exact: true });
            table.push(QuantityRow { quantity: "h_mu(f) max".into(), level: level.clone(), value: ext.metric_max[k], exact: true });
            let plus_rate = plus[finest].rows[row.n - 1].rate;
            let plus_level = format!("{level},eps={}", eps_ladder[finest]);
            records.push(record("h_mu(phi) <= h_plus(phi)", row.rate, plus_rate, plus_level, false, false));
            records.push(record("h_mu(f) <= h_mu(phi)", ext.metric_max[k], row.rate, level.clone(), false, false));
            records.push(record("h_mu(phi) <= h_mu(f)", row.rate, ext.metric_min[k], level, false, false));
            k += 1;
        }
    }
    Ok(SandwichReport {
        selections: count,
        sampled,
        table,
        records,
    })
}

/// The grid restriction `i ↦ round(m·f(i/m))` of a PL selection, as a finite map on `{i/m}`.
pub fn discretize_selection(f: &PlFunction, m: usize) -> Result<Vec<usize>> {
    if m == 0 {
        return Err(Error::Domain("grid size must be positive".into()));
    }
    let mi = m as i128;
    Ok((0..=mi)
        .map(|i| {
            let y = f.eval(&Rational::new(i, mi)) * Rational::from_integer(mi);
            y.round().to_integer().clamp(0, mi) as usize
        })
        .collect())
}
