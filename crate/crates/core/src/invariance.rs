//! Invariant measures of a multivalued map: `μ(φ⁻¹₊(A)) ≥ μ(A)` for all `A`,
//! decided by subset enumeration or by a transport max-flow, a constructor for
//! invariant measures, and the strong condition pairing
//! `μ(φ⁻¹₊(A)) = μ(A)` with `μ(φ⁻¹₊(A) ∩ φ⁻¹₊(B)) = μ(φ⁻¹₊(A ∩ B))`.

use std::collections::HashMap;

use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Zero};
use petgraph::algo::{dinics, tarjan_scc};
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;

use crate::carrier::{Carrier, FiniteRelation, SetAlgebra};
use crate::error::{Error, Result};
use crate::interval::{Boundary, Interval, IntervalSet};
use crate::measure::{PointMeasure, ProbabilityMeasure};
use crate::pointset::PointSet;
use crate::Rational;

/// Largest carrier for exhaustive subset checks.
pub const BRUTEFORCE_CAP: usize = 20;

/// Largest carrier for the all-subsets family.
pub const ALL_SUBSETS_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bruteforce,
    Flow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InvarianceVerdict {
    pub invariant: bool,
    /// The first violating set in bit-mask order, when known.
    pub witness: Option<String>,
    pub method: Method,
}

fn check_sizes(mu: &PointMeasure, phi: &FiniteRelation) -> Result<()> {
    mu.check_carrier(&PointSet::full(phi.len()))
}

/// Checks every subset `A`; the witness is the first failure in mask order.
pub fn verify_invariance_bruteforce(mu: &PointMeasure, phi: &FiniteRelation) -> Result<InvarianceVerdict> {
    check_sizes(mu, phi)?;
    let n = phi.len();
    if n > BRUTEFORCE_CAP {
        return Err(Error::CapExceeded {
            what: format!("subset enumeration over {n} points"),
            limit: BRUTEFORCE_CAP,
        });
    }
    let pre_point: Vec<u32> = (0..n).map(|y| phi.preimage_of_point(y).to_mask() as u32).collect();
    let w = mu.numerators();
    let size = 1usize << n;
    // pre[A] and mass[A] built from A without its lowest point
    let mut pre = vec![0u32; size];
    let mut mass = vec![0i128; size];
    for a in 1..size {
        let low = a.trailing_zeros() as usize;
        let rest = a & (a - 1);
        pre[a] = pre[rest] | pre_point[low];
        mass[a] = mass[rest] + w[low];
    }
    let witness = (1..size).find(|&a| mass[pre[a] as usize] < mass[a]);
    Ok(InvarianceVerdict {
        invariant: witness.is_none(),
        witness: witness.map(|a| PointSet::from_mask(n, a as u64).to_string()),
        method: Method::Bruteforce,
    })
}

/// Decides invariance as a transport problem: ship `μ(x)` from every `x` to
/// points of `φ(x)` so that every `y` receives exactly `μ(y)`. A full flow
/// exists iff `μ(A) ≤ μ(φ⁻¹₊(A))` for every `A`.
pub fn verify_invariance_flow(mu: &PointMeasure, phi: &FiniteRelation) -> Result<InvarianceVerdict> {
    check_sizes(mu, phi)?;
    let n = phi.len();
    let mut g: DiGraph<(), u128> = DiGraph::with_capacity(2 * n + 2, n * n + 2 * n);
    let source = g.add_node(());
    let sink = g.add_node(());
    let left: Vec<NodeIndex> = (0..n).map(|_| g.add_node(())).collect();
    let right: Vec<NodeIndex> = (0..n).map(|_| g.add_node(())).collect();
    let total = mu.denominator() as u128;
    for x in 0..n {
        let w = mu.numerators()[x] as u128;
        if w > 0 {
            g.add_edge(source, left[x], w);
            g.add_edge(right[x], sink, w);
        }
        for y in phi.image(x).iter() {
            g.add_edge(left[x], right[y], total);
        }
    }
    let (flow, _) = dinics(&g, source, sink);
    Ok(InvarianceVerdict {
        invariant: flow == total,
        witness: None,
        method: Method::Flow,
    })
}

/// An invariant measure: the average over closed communicating classes of the
/// stationary law of the kernel that picks a uniform point of `φ(x)`.
pub fn find_invariant_measure(phi: &FiniteRelation) -> Result<PointMeasure> {
    let n = phi.len();
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(n, n);
    let nodes: Vec<NodeIndex> = (0..n).map(|_| g.add_node(())).collect();
    for x in 0..n {
        for y in phi.image(x).iter() {
            g.add_edge(nodes[x], nodes[y], ());
        }
    }
    let mut closed: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|i| i.index()).collect();
            v.sort_unstable();
            v
        })
        .filter(|c| c.iter().all(|&x| phi.image(x).iter().all(|y| c.binary_search(&y).is_ok())))
        .collect();
    closed.sort();
    let share = Rational::new(1, closed.len() as i128);
    let mut weights = vec![Rational::zero(); n];
    for class in &closed {
        let pi = stationary(phi, class)?;
        for (&x, p) in class.iter().zip(pi) {
            weights[x] = p * share;
        }
    }
    PointMeasure::new(&weights)
}

fn overflow() -> Error {
    Error::CapExceeded {
        what: "rational arithmetic in the stationary solve".into(),
        limit: i128::MAX as usize,
    }
}

/// Solves `πK = π`, `Σπ = 1` on a closed irreducible class by exact elimination.
fn stationary(phi: &FiniteRelation, class: &[usize]) -> Result<Vec<Rational>> {
    let k = class.len();
    let pos: HashMap<usize, usize> = class.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    // rows: equations Σ_x π(x) K(x, y) − π(y) = 0 for y ≠ last, then Σ π = 1
    let mut a = vec![vec![Rational::zero(); k + 1]; k];
    for (i, &x) in class.iter().enumerate() {
        let out = phi.image(x);
        let p = Rational::new(1, out.len() as i128);
        for y in out.iter() {
            let j = pos[&y];
            if j + 1 < k {
                a[j][i] += p;
            }
        }
        if i + 1 < k {
            a[i][i] -= Rational::one();
        }
    }
    for cell in a[k - 1].iter_mut().take(k) {
        *cell = Rational::one();
    }
    a[k - 1][k] = Rational::one();
    for col in 0..k {
        let pivot = (col..k).find(|&r| !a[r][col].is_zero()).expect("irreducible kernel has a unique law");
        a.swap(col, pivot);
        let pv = a[col][col];
        for cell in &mut a[col][col..=k] {
            *cell = cell.checked_div(&pv).ok_or_else(overflow)?;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let f = row[col];
                for (cell, p) in row[col..=k].iter_mut().zip(&pivot_row[col..=k]) {
                    let delta = f.checked_mul(p).ok_or_else(overflow)?;
                    *cell = cell.checked_sub(&delta).ok_or_else(overflow)?;
                }
            }
        }
    }
    let pi: Vec<Rational> = a.iter().map(|row| row[k]).collect();
    let total = pi
        .iter()
        .try_fold(Rational::zero(), |s, p| s.checked_add(p))
        .ok_or_else(overflow)?;
    debug_assert_eq!(total, Rational::one());
    Ok(pi)
}

/// A finite family of sets over which the strong condition is checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetFamily<S> {
    members: Vec<S>,
    description: String,
}

impl<S: SetAlgebra> SetFamily<S> {
    /// Duplicates are dropped; order of first appearance is kept.
    pub fn new(members: Vec<S>, description: impl Into<String>) -> Self {
        let mut seen = std::collections::HashSet::new();
        let members = members.into_iter().filter(|m| seen.insert(m.clone())).collect();
        SetFamily {
            members,
            description: description.into(),
        }
    }

    pub fn members(&self) -> &[S] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

impl SetFamily<PointSet> {
    pub fn all_subsets(n: usize) -> Result<Self> {
        if n > ALL_SUBSETS_CAP {
            return Err(Error::CapExceeded {
                what: format!("all subsets of {n} points"),
                limit: ALL_SUBSETS_CAP,
            });
        }
        let members = (0..1u64 << n).map(|m| PointSet::from_mask(n, m)).collect();
        Ok(SetFamily::new(members, format!("all subsets of {n} points")))
    }
}

impl SetFamily<IntervalSet> {
    /// The empty set, every singleton `{i/m}`, and every interval with endpoints
    /// `i/m < j/m` under all four open/closed combinations. Closed under intersection.
    pub fn interval_grid(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("grid size must be positive".into()));
        }
        let mi = m as i128;
        let mut members = vec![IntervalSet::empty()];
        for i in 0..=mi {
            members.push(IntervalSet::point(Rational::new(i, mi))?);
        }
        for i in 0..=mi {
            for j in i + 1..=mi {
                let (a, b) = (Rational::new(i, mi), Rational::new(j, mi));
                for (lc, hc) in [(true, true), (true, false), (false, true), (false, false)] {
                    let lo = if lc { Boundary::closed(a) } else { Boundary::open(a) };
                    let hi = if hc { Boundary::closed(b) } else { Boundary::open(b) };
                    members.push(IntervalSet::normalize(&[Interval::new(lo, hi)?])?);
                }
            }
        }
        Ok(SetFamily::new(members, format!("intervals with endpoints on the 1/{m} grid")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrongCondition {
    /// `μ(φ⁻¹₊(A)) = μ(A)`.
    PreimageMeasure,
    /// `μ(φ⁻¹₊(A) ∩ φ⁻¹₊(B)) = μ(φ⁻¹₊(A ∩ B))`.
    Intersection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrongWitness {
    pub condition: StrongCondition,
    pub a: String,
    pub b: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrongInvarianceVerdict {
    pub holds: bool,
    pub witness: Option<StrongWitness>,
    pub family: String,
    pub family_size: usize,
}

/// Preimages, masses and intersection table of a family, shared by the checks.
struct FamilyData<S> {
    pre: Vec<S>,
    mass: Vec<Rational>,
    pre_mass: Vec<Rational>,
}

fn family_data<C, M>(mu: &M, phi: &C, family: &SetFamily<C::Set>) -> Result<FamilyData<C::Set>>
where
    C: Carrier,
    M: ProbabilityMeasure<C::Set>,
{
    mu.check_carrier(&phi.universe())?;
    let pre: Vec<C::Set> = family.members.iter().map(|a| phi.large_preimage(a)).collect();
    let mass = family.members.iter().map(|a| mu.mass(a)).collect();
    let pre_mass = pre.iter().map(|p| mu.mass(p)).collect();
    Ok(FamilyData { pre, mass, pre_mass })
}

/// Visits every pair `i ≤ j` with the family index of `A_i ∩ A_j`.
fn for_pairs<S: SetAlgebra>(family: &SetFamily<S>, mut visit: impl FnMut(usize, usize, usize)) -> Result<()> {
    let index: HashMap<&S, usize> = family.members.iter().enumerate().map(|(i, s)| (s, i)).collect();
    for i in 0..family.len() {
        for j in i..family.len() {
            let meet = family.members[i].intersect(&family.members[j]);
            let k = *index.get(&meet).ok_or_else(|| {
                Error::Config(format!(
                    "family is not closed under intersection: {} ∩ {} = {meet}",
                    family.members[i], family.members[j]
                ))
            })?;
            visit(i, j, k);
        }
    }
    Ok(())
}

/// Checks both equalities of the strong condition over `family × family`.
pub fn verify_strong_invariance<C, M>(mu: &M, phi: &C, family: &SetFamily<C::Set>) -> Result<StrongInvarianceVerdict>
where
    C: Carrier,
    M: ProbabilityMeasure<C::Set>,
{
    let data = family_data(mu, phi, family)?;
    let mut witness = (0..family.len())
        .find(|&i| data.pre_mass[i] != data.mass[i])
        .map(|i| StrongWitness {
            condition: StrongCondition::PreimageMeasure,
            a: family.members[i].to_string(),
            b: None,
        });
    let mut pair_witness = None;
    for_pairs(family, |i, j, k| {
        if pair_witness.is_none() && mu.mass(&data.pre[i].intersect(&data.pre[j])) != data.pre_mass[k] {
            pair_witness = Some(StrongWitness {
                condition: StrongCondition::Intersection,
                a: family.members[i].to_string(),
                b: Some(family.members[j].to_string()),
            });
        }
    })?;
    if witness.is_none() {
        witness = pair_witness;
    }
    Ok(StrongInvarianceVerdict {
        holds: witness.is_none(),
        witness,
        family: family.description.clone(),
        family_size: family.len(),
    })
}

/// Outcome of comparing the `≤` form of the strong condition with the equality form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrongInvarianceForms {
    /// `μ(φ⁻¹₊(A)) ≤ μ(A)` and `μ(φ⁻¹₊(A) ∩ φ⁻¹₊(B)) ≤ μ(φ⁻¹₊(A ∩ B))` on the family.
    pub le_form: bool,
    pub eq_form: bool,
}

impl StrongInvarianceForms {
    pub fn equivalent(&self) -> bool {
        self.le_form == self.eq_form
    }
}

/// Evaluates both forms. The reverse inequalities are invariance and the
/// containment `φ⁻¹₊(A ∩ B) ⊂ φ⁻¹₊(A) ∩ φ⁻¹₊(B)`; the first is required on the
/// family ([`Error::NotInvariant`] otherwise) and the second is checked exactly.
pub fn strong_invariance_forms<C, M>(mu: &M, phi: &C, family: &SetFamily<C::Set>) -> Result<StrongInvarianceForms>
where
    C: Carrier,
    M: ProbabilityMeasure<C::Set>,
{
    let data = family_data(mu, phi, family)?;
    if let Some(i) = (0..family.len()).find(|&i| data.pre_mass[i] < data.mass[i]) {
        return Err(Error::NotInvariant(family.members[i].to_string()));
    }
    let mut le = (0..family.len()).all(|i| data.pre_mass[i] <= data.mass[i]);
    let mut eq = (0..family.len()).all(|i| data.pre_mass[i] == data.mass[i]);
    let mut containment_ok = true;
    for_pairs(family, |i, j, k| {
        let meet = data.pre[i].intersect(&data.pre[j]);
        containment_ok &= data.pre[k].is_subset(&meet);
        let lhs = mu.mass(&meet);
        le &= lhs <= data.pre_mass[k];
        eq &= lhs == data.pre_mass[k];
    })?;
    if !containment_ok {
        return Err(Error::Domain("large preimage failed to be monotone".into()));
    }
    Ok(StrongInvarianceForms { le_form: le, eq_form: eq })
}

/// `μ(φ⁻¹₊(A)) ≥ μ(A)` for every family member; the witness is the first failure.
pub fn verify_invariance_on_family<C, M>(mu: &M, phi: &C, family: &SetFamily<C::Set>) -> Result<InvarianceVerdict>
where
    C: Carrier,
    M: ProbabilityMeasure<C::Set>,
{
    let data = family_data(mu, phi, family)?;
    let witness = (0..family.len()).find(|&i| data.pre_mass[i] < data.mass[i]);
    Ok(InvarianceVerdict {
        invariant: witness.is_none(),
        witness: witness.map(|i| family.members[i].to_string()),
        method: Method::Bruteforce,
    })
}

/// The JSON-facing summary of invariance and the strong condition on a finite carrier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InvarianceReport {
    pub invariant: bool,
    pub strong: bool,
    pub witness: Option<String>,
    pub method: Method,
}

pub fn invariance_report(mu: &PointMeasure, phi: &FiniteRelation, method: Method) -> Result<InvarianceReport> {
    let verdict = match method {
        Method::Bruteforce => verify_invariance_bruteforce(mu, phi)?,
        Method::Flow => verify_invariance_flow(mu, phi)?,
    };
    let family = SetFamily::all_subsets(phi.len())?;
    let strong = verify_strong_invariance(mu, phi, &family)?;
    let witness = verdict
        .witness
        .clone()
        .or_else(|| strong.witness.as_ref().map(|w| w.a.clone()));
    Ok(InvarianceReport {
        invariant: verdict.invariant,
        strong: strong.holds,
        witness,
        method,
    })
}
