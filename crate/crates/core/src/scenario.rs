//! Declarative scenarios: a JSON document naming a carrier, a map, measures,
//! partitions, covers and a list of checks, executed into a deterministic
//! JSON report plus CSV tables.
//!
//! ```json
//! {
//!   "name": "tent",
//!   "carrier": {"kind": "interval"},
//!   "map": {"kind": "preset", "name": "shifted-tent"},
//!   "partitions": {"P": ["[0,1/2]", "(1/2,1]"]},
//!   "checks": [{"kind": "disjointify", "partition": "P", "k": 1}]
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::carrier::{Carrier, FiniteMetricSpace, FiniteRelation, PlMultiMap, Regularity};
use crate::cover::{ball_cover_finite, h_plus_estimate, iterate_refinement_check, pullback_cover, Cover};
use crate::error::{Error, Result};
use crate::estimate::params as param_map;
use crate::interval::{parse_rational, IntervalSet};
use crate::invariance::{
    strong_invariance_forms, find_invariant_measure, verify_strong_invariance, verify_invariance_bruteforce,
    verify_invariance_flow, verify_invariance_on_family, SetFamily,
};
use crate::measure::{IntervalMeasure, PointMeasure, ProbabilityMeasure};
use crate::orbit::{h_cm_estimate, h_kt_estimate, hyperspace_entropy, OrbitConfig, OrbitEntropy, DEFAULT_ORBIT_CAP};
use crate::partition::{
    conditional_entropy, disjointify, entropy_bound_check, metric_entropy_estimate, nz_count, partition_entropy,
    refinement_sequence, OrderedPartition,
};
use crate::pointset::PointSet;
use crate::selection::{pl_selection, sandwich_report, SandwichConfig, DEFAULT_SELECTION_CAP};
use crate::solver::SolverConfig;
use crate::{presets, Rational};

/// Process exit status of a scenario or suite run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitStatus {
    Pass,
    AssertionFailure,
    CapOverflow,
    ParseError,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Pass => 0,
            ExitStatus::AssertionFailure => 1,
            ExitStatus::ParseError => 2,
            ExitStatus::CapOverflow => 3,
        }
    }

    /// Classifies an error that stopped a run or a check.
    pub fn of_error(e: &Error) -> Self {
        match e {
            Error::Parse { .. } | Error::Config(_) => ExitStatus::ParseError,
            Error::CapExceeded { .. } => ExitStatus::CapOverflow,
            _ => ExitStatus::AssertionFailure,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub carrier: CarrierSpec,
    pub map: MapSpec,
    #[serde(default)]
    pub measures: BTreeMap<String, MeasureSpec>,
    #[serde(default)]
    pub partitions: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub covers: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub params: Params,
    pub checks: Vec<CheckSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CarrierSpec {
    Interval,
    /// `size` points at mutual distance 1.
    Discrete { size: usize },
    /// Points of `[0, 1]` with the distance `|x − y|`.
    Line { points: Vec<String> },
    Metric { distances: Vec<Vec<String>> },
    /// The grid `{i/m}` with `m = params.grid`.
    Grid,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapSpec {
    /// A named map: any PL preset on the interval; `full`, `identity` on finite carriers.
    Preset { name: String },
    Branches { branches: Box<PlMultiMap> },
    Relation { images: Vec<Vec<usize>> },
    Function { values: Vec<usize> },
    /// Outer grid approximation of a PL map, on the `grid` carrier.
    Discretize { of: Box<MapSpec> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSpec {
    Lebesgue,
    Density(IntervalMeasure),
    Uniform,
    Weights { weights: Vec<String> },
    Counts { counts: Vec<u64> },
    /// The constructed invariant measure of the relation.
    Invariant,
    /// Lebesgue mass of the grid cells around each grid point.
    GridLebesgue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub max_n: usize,
    pub grid: usize,
    pub eps_ladder: Vec<String>,
    pub exact_threshold: usize,
    pub node_budget: u64,
    pub orbit_cap: usize,
    pub hyperspace_cap: usize,
    pub selection_cap: u64,
    pub seed: u64,
}

impl Default for Params {
    fn default() -> Self {
        let solver = SolverConfig::default();
        Params {
            max_n: 6,
            grid: 22,
            eps_ladder: vec!["1/2".into()],
            exact_threshold: solver.exact_threshold,
            node_budget: solver.node_budget,
            orbit_cap: DEFAULT_ORBIT_CAP,
            hyperspace_cap: crate::carrier::DEFAULT_HYPERSPACE_CAP,
            selection_cap: DEFAULT_SELECTION_CAP,
            seed: 0,
        }
    }
}

impl Params {
    fn solver(&self) -> SolverConfig {
        SolverConfig {
            exact_threshold: self.exact_threshold,
            node_budget: self.node_budget,
        }
    }

    fn orbit(&self) -> OrbitConfig {
        OrbitConfig {
            solver: self.solver(),
            orbit_cap: self.orbit_cap,
        }
    }

    fn ladder(&self, custom: &Option<Vec<String>>) -> Result<Vec<Rational>> {
        let raw = custom.as_ref().unwrap_or(&self.eps_ladder);
        if raw.is_empty() {
            return Err(Error::Config("empty ε ladder".into()));
        }
        raw.iter().map(|s| parse_rational(s)).collect()
    }
}

/// Command-line overrides applied on top of a scenario's `params`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overrides {
    pub max_n: Option<usize>,
    pub grid: Option<usize>,
    pub eps_ladder: Option<Vec<String>>,
    pub exact_threshold: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, p: &mut Params) {
        if let Some(n) = self.max_n {
            p.max_n = n;
        }
        if let Some(m) = self.grid {
            p.grid = m;
        }
        if let Some(l) = &self.eps_ladder {
            p.eps_ladder = l.clone();
        }
        if let Some(k) = self.exact_threshold {
            p.exact_threshold = k;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Gt,
    Ge,
    Eq,
    Le,
    Lt,
}

impl Relation {
    fn holds(self, a: usize, b: usize) -> bool {
        match self {
            Relation::Gt => a > b,
            Relation::Ge => a >= b,
            Relation::Eq => a == b,
            Relation::Le => a <= b,
            Relation::Lt => a < b,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CardRef {
    pub partition: String,
    /// Index in the refinement sequence, `1` being the partition itself.
    pub n: usize,
}

/// A float expected within `tol`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Approx {
    pub value: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    1e-9
}

impl Approx {
    fn matches(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.tol
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelExpect {
    pub eps: String,
    /// Checked against the rate at this depth; the tail estimate when absent.
    #[serde(default)]
    pub n: Option<usize>,
    pub value: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Intervals with endpoints on the `1/m` grid; `m` defaults to `params.grid`.
    IntervalGrid {
        #[serde(default)]
        m: Option<usize>,
    },
    AllSubsets,
    List { members: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InvarianceMethod {
    Bruteforce,
    Flow,
    Family,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreimageKind {
    Large,
    Small,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionExpect {
    Ok,
    Error,
}

// no deny_unknown_fields: the check is flattened next to its `id`
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CheckKind {
    Disjointify {
        partition: String,
        k: usize,
        #[serde(default)]
        expect: Option<Vec<String>>,
    },
    Refinement {
        partition: String,
        #[serde(default)]
        depth: Option<usize>,
        #[serde(default)]
        expect_cards: Option<Vec<usize>>,
    },
    CardCompare {
        lhs: CardRef,
        rhs: CardRef,
        relation: Relation,
    },
    PartitionEntropy {
        measure: String,
        partition: String,
        #[serde(default)]
        expect: Option<Approx>,
    },
    ConditionalEntropy {
        measure: String,
        partition: String,
        given: String,
        #[serde(default)]
        expect: Option<Approx>,
    },
    EntropyBound {
        measure: String,
        partition: String,
    },
    MetricEntropy {
        measure: String,
        partition: String,
        #[serde(default)]
        depth: Option<usize>,
        #[serde(default)]
        expect: Option<Approx>,
    },
    Invariance {
        measure: String,
        method: InvarianceMethod,
        #[serde(default)]
        family: Option<FamilySpec>,
        #[serde(default)]
        expect: Option<bool>,
    },
    FindInvariant {
        #[serde(default)]
        expect: Option<Vec<String>>,
    },
    StrongInvariance {
        measure: String,
        family: FamilySpec,
        #[serde(default)]
        expect: Option<bool>,
    },
    StrongInvarianceForms {
        measure: String,
        family: FamilySpec,
    },
    HKt {
        #[serde(default)]
        eps_ladder: Option<Vec<String>>,
        #[serde(default)]
        depth: Option<usize>,
        #[serde(default)]
        expect: Vec<LevelExpect>,
    },
    HCm {
        #[serde(default)]
        eps_ladder: Option<Vec<String>>,
        #[serde(default)]
        depth: Option<usize>,
        #[serde(default)]
        expect: Vec<LevelExpect>,
    },
    Hyperspace {
        #[serde(default)]
        eps_ladder: Option<Vec<String>>,
        #[serde(default)]
        depth: Option<usize>,
        #[serde(default)]
        expect: Vec<LevelExpect>,
    },
    HPlus {
        /// A named cover; open `ε`-balls on a finite carrier when absent.
        #[serde(default)]
        cover: Option<String>,
        #[serde(default)]
        eps: Option<String>,
        #[serde(default)]
        depth: Option<usize>,
        #[serde(default)]
        expect: Option<Approx>,
    },
    PullbackOpen {
        cover: String,
        #[serde(default = "one")]
        j: usize,
        #[serde(default)]
        expect_open: Option<bool>,
    },
    IterateRefinement {
        cover: String,
        n: usize,
        k: usize,
    },
    Preimage {
        set: String,
        which: PreimageKind,
        #[serde(default = "one")]
        k: usize,
        #[serde(default)]
        expect: Option<String>,
    },
    Regularity {
        #[serde(default)]
        expect: Option<Regularity>,
    },
    PlSelection {
        expect: SelectionExpect,
        #[serde(default)]
        expect_knots: Option<Vec<[String; 2]>>,
    },
    Sandwich {
        #[serde(default)]
        measures: Vec<String>,
        #[serde(default)]
        partitions: Vec<String>,
        #[serde(default)]
        eps_ladder: Option<Vec<String>>,
        #[serde(default)]
        depth: Option<usize>,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
pub struct CheckSpec {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(flatten)]
    pub kind: CheckKind,
}

impl CheckKind {
    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Disjointify { .. } => "disjointify",
            CheckKind::Refinement { .. } => "refinement",
            CheckKind::CardCompare { .. } => "card-compare",
            CheckKind::PartitionEntropy { .. } => "partition-entropy",
            CheckKind::ConditionalEntropy { .. } => "conditional-entropy",
            CheckKind::EntropyBound { .. } => "entropy-bound",
            CheckKind::MetricEntropy { .. } => "metric-entropy",
            CheckKind::Invariance { .. } => "invariance",
            CheckKind::FindInvariant { .. } => "find-invariant",
            CheckKind::StrongInvariance { .. } => "strong-invariance",
            CheckKind::StrongInvarianceForms { .. } => "strong-invariance-forms",
            CheckKind::HKt { .. } => "h-kt",
            CheckKind::HCm { .. } => "h-cm",
            CheckKind::Hyperspace { .. } => "hyperspace",
            CheckKind::HPlus { .. } => "h-plus",
            CheckKind::PullbackOpen { .. } => "pullback-open",
            CheckKind::IterateRefinement { .. } => "iterate-refinement",
            CheckKind::Preimage { .. } => "preimage",
            CheckKind::Regularity { .. } => "regularity",
            CheckKind::PlSelection { .. } => "pl-selection",
            CheckKind::Sandwich { .. } => "sandwich",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Computed with nothing to assert.
    Info,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub id: String,
    pub kind: String,
    pub status: CheckStatus,
    /// Every count behind the result was computed exactly.
    pub exact: bool,
    pub params: BTreeMap<String, String>,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub description: String,
    pub version: String,
    pub params: Params,
    pub status: ExitStatus,
    pub checks: Vec<CheckOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub report: Report,
    /// `(file name, CSV text)`, in check order.
    pub tables: Vec<(String, String)>,
}

impl RunOutcome {
    pub fn exit_status(&self) -> ExitStatus {
        self.report.status
    }

    pub fn report_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes `report.json` and every table into `dir`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.report_json())?;
        for (name, csv) in &self.tables {
            std::fs::write(dir.join(name), csv)?;
        }
        Ok(())
    }
}

/// Parses a scenario document; syntax and schema errors become [`Error::Parse`]
/// with the byte offset of the failure.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    serde_json::from_str(text).map_err(|e| {
        let pos = text
            .split_inclusive('\n')
            .take(e.line().saturating_sub(1))
            .map(str::len)
            .sum::<usize>()
            + e.column().saturating_sub(1);
        Error::Parse { pos, msg: e.to_string() }
    })
}

/// Built-in scenarios: `(name, JSON)`.
pub const BUILTINS: &[(&str, &str)] = &[
    ("tent-counterexample", include_str!("../scenarios/tent-counterexample.json")),
    ("endpoint-split-invariance", include_str!("../scenarios/endpoint-split-invariance.json")),
    ("full-shift-2", include_str!("../scenarios/full-shift-2.json")),
    ("shift-like-invariance", include_str!("../scenarios/shift-like-invariance.json")),
    ("band-selection", include_str!("../scenarios/band-selection.json")),
    ("endpoint-split-openness", include_str!("../scenarios/endpoint-split-openness.json")),
    ("full-shift-sandwich", include_str!("../scenarios/full-shift-sandwich.json")),
    ("endpoint-split-sandwich", include_str!("../scenarios/endpoint-split-sandwich.json")),
];

pub fn builtin(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Parses and runs a scenario. Errors here are load errors (bad document,
/// unknown names, invalid sets); failures inside checks land in the report.
pub fn run_scenario_text(text: &str, overrides: &Overrides) -> Result<RunOutcome> {
    let mut scenario = parse_scenario(text)?;
    overrides.apply(&mut scenario.params);
    run_scenario(&scenario)
}

pub fn run_scenario(scenario: &Scenario) -> Result<RunOutcome> {
    let instance = Instance::build(scenario)?;
    let mut checks = Vec::with_capacity(scenario.checks.len());
    let mut tables = Vec::new();
    let mut status = ExitStatus::Pass;
    for (i, spec) in scenario.checks.iter().enumerate() {
        let id = spec.id.clone().unwrap_or_else(|| format!("{:02}-{}", i + 1, spec.kind.name()));
        let outcome = match instance.run(&spec.kind, &scenario.params) {
            Ok(body) => {
                for (suffix, csv) in body.tables {
                    tables.push((format!("{id}{suffix}.csv"), csv));
                }
                let st = match body.passed {
                    None => CheckStatus::Info,
                    Some(true) => CheckStatus::Pass,
                    Some(false) => CheckStatus::Fail,
                };
                if st == CheckStatus::Fail {
                    status = status.max(ExitStatus::AssertionFailure);
                }
                CheckOutcome {
                    id,
                    kind: spec.kind.name().into(),
                    status: st,
                    exact: body.exact,
                    params: body.params,
                    result: body.result,
                    message: None,
                }
            }
            Err(e) => {
                status = status.max(ExitStatus::of_error(&e));
                CheckOutcome {
                    id,
                    kind: spec.kind.name().into(),
                    status: CheckStatus::Error,
                    exact: false,
                    params: BTreeMap::new(),
                    result: Value::Null,
                    message: Some(e.to_string()),
                }
            }
        };
        checks.push(outcome);
    }
    Ok(RunOutcome {
        report: Report {
            scenario: scenario.name.clone(),
            description: scenario.description.clone(),
            version: env!("CARGO_PKG_VERSION").into(),
            params: scenario.params.clone(),
            status,
            checks,
        },
        tables,
    })
}

/// What one check produced.
struct Body {
    passed: Option<bool>,
    exact: bool,
    params: BTreeMap<String, String>,
    result: Value,
    /// `(file suffix, CSV)`.
    tables: Vec<(String, String)>,
}

impl Body {
    fn new(passed: Option<bool>, result: Value) -> Self {
        Body {
            passed,
            exact: true,
            params: BTreeMap::new(),
            result,
            tables: Vec::new(),
        }
    }

    fn exact(mut self, exact: bool) -> Self {
        self.exact = exact;
        self
    }

    fn with_params<K: Into<String>, V: ToString>(mut self, pairs: impl IntoIterator<Item = (K, V)>) -> Self {
        self.params = param_map(pairs);
        self
    }

    fn table(mut self, suffix: &str, csv: String) -> Self {
        self.tables.push((suffix.into(), csv));
        self
    }
}

/// Combines optional expectations: `None` only when nothing was asserted.
fn all_of(parts: impl IntoIterator<Item = Option<bool>>) -> Option<bool> {
    parts.into_iter().flatten().fold(None, |acc, b| Some(acc.unwrap_or(true) && b))
}

/// Set-literal syntax and standard set families of a carrier.
trait SetSyntax: Carrier {
    fn parse_set(&self, s: &str) -> Result<Self::Set>;

    fn standard_family(&self, spec: &FamilySpec, grid: usize) -> Result<SetFamily<Self::Set>>;

    fn family(&self, spec: &FamilySpec, grid: usize) -> Result<SetFamily<Self::Set>> {
        match spec {
            FamilySpec::List { members } => {
                let sets = members.iter().map(|s| self.parse_set(s)).collect::<Result<Vec<_>>>()?;
                Ok(SetFamily::new(sets, format!("{} listed sets", members.len())))
            }
            _ => self.standard_family(spec, grid),
        }
    }
}

impl SetSyntax for PlMultiMap {
    fn parse_set(&self, s: &str) -> Result<IntervalSet> {
        s.parse()
    }

    fn standard_family(&self, spec: &FamilySpec, grid: usize) -> Result<SetFamily<IntervalSet>> {
        match spec {
            FamilySpec::IntervalGrid { m } => SetFamily::interval_grid(m.unwrap_or(grid)),
            _ => Err(Error::Config("all-subsets needs a finite carrier".into())),
        }
    }
}

impl SetSyntax for FiniteRelation {
    fn parse_set(&self, s: &str) -> Result<PointSet> {
        PointSet::parse(self.len(), s)
    }

    fn standard_family(&self, spec: &FamilySpec, _: usize) -> Result<SetFamily<PointSet>> {
        match spec {
            FamilySpec::AllSubsets => SetFamily::all_subsets(self.len()),
            _ => Err(Error::Config("interval-grid needs the interval carrier".into())),
        }
    }
}

struct Bound<C: Carrier, M> {
    map: C,
    measures: BTreeMap<String, M>,
    partitions: BTreeMap<String, OrderedPartition<C::Set>>,
    covers: BTreeMap<String, Cover<C::Set>>,
}

enum Instance {
    Interval(Bound<PlMultiMap, IntervalMeasure>),
    Finite(Bound<FiniteRelation, PointMeasure>),
}

fn lookup<'a, T>(map: &'a BTreeMap<String, T>, what: &str, key: &str) -> Result<&'a T> {
    map.get(key).ok_or_else(|| Error::Config(format!("unknown {what} {key:?}")))
}

fn finite_only(what: &str) -> Error {
    Error::Config(format!("{what} needs a finite carrier (discretize the map)"))
}

fn build_pl(spec: &MapSpec) -> Result<PlMultiMap> {
    match spec {
        MapSpec::Preset { name } => {
            presets::pl_by_name(name).ok_or_else(|| Error::Config(format!("unknown PL preset {name:?}")))
        }
        MapSpec::Branches { branches } => Ok((**branches).clone()),
        _ => Err(Error::Config("an interval carrier needs a preset or branch map".into())),
    }
}

fn build_space(spec: &CarrierSpec, params: &Params) -> Result<Arc<FiniteMetricSpace>> {
    Ok(Arc::new(match spec {
        CarrierSpec::Interval => unreachable!("handled by the caller"),
        CarrierSpec::Discrete { size } => FiniteMetricSpace::discrete(*size),
        CarrierSpec::Line { points } => {
            let xs = points.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
            FiniteMetricSpace::on_line(&xs)?
        }
        CarrierSpec::Metric { distances } => {
            let d = distances
                .iter()
                .map(|row| row.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            FiniteMetricSpace::new(d)?
        }
        CarrierSpec::Grid => FiniteMetricSpace::unit_grid(params.grid),
    }))
}

fn build_relation(spec: &MapSpec, space: Arc<FiniteMetricSpace>, params: &Params) -> Result<FiniteRelation> {
    match spec {
        MapSpec::Preset { name } => match name.as_str() {
            "full" => Ok(FiniteRelation::full(space)),
            "identity" => Ok(FiniteRelation::identity(space)),
            _ => Err(Error::Config(format!("unknown finite preset {name:?}"))),
        },
        MapSpec::Relation { images } => FiniteRelation::from_lists(space, images),
        MapSpec::Function { values } => FiniteRelation::from_function(space, values),
        MapSpec::Discretize { of } => {
            let rel = build_pl(of)?.discretize(params.grid)?;
            if rel.len() != space.len() {
                return Err(Error::Config("a discretized map needs the grid carrier".into()));
            }
            Ok(rel)
        }
        MapSpec::Branches { .. } => Err(Error::Config("branch maps live on the interval carrier".into())),
    }
}

fn build_named<C: SetSyntax, M>(
    map: C,
    scenario: &Scenario,
    measure: impl Fn(&C, &MeasureSpec) -> Result<M>,
) -> Result<Bound<C, M>> {
    let universe = map.universe();
    let parse_all = |members: &[String]| members.iter().map(|s| map.parse_set(s)).collect::<Result<Vec<_>>>();
    let mut partitions = BTreeMap::new();
    for (name, members) in &scenario.partitions {
        partitions.insert(name.clone(), OrderedPartition::new(parse_all(members)?, &universe)?);
    }
    let mut covers = BTreeMap::new();
    for (name, members) in &scenario.covers {
        covers.insert(name.clone(), Cover::new(&map, parse_all(members)?)?);
    }
    let mut measures = BTreeMap::new();
    for (name, spec) in &scenario.measures {
        let mu = measure(&map, spec)?;
        measures.insert(name.clone(), mu);
    }
    Ok(Bound {
        map,
        measures,
        partitions,
        covers,
    })
}

impl Instance {
    fn build(s: &Scenario) -> Result<Self> {
        if let CarrierSpec::Interval = s.carrier {
            let map = build_pl(&s.map)?;
            return Ok(Instance::Interval(build_named(map, s, |_, spec| match spec {
                MeasureSpec::Lebesgue => Ok(IntervalMeasure::lebesgue()),
                MeasureSpec::Density(m) => Ok(m.clone()),
                _ => Err(Error::Config("interval measures are lebesgue or density".into())),
            })?));
        }
        let space = build_space(&s.carrier, &s.params)?;
        let map = build_relation(&s.map, space, &s.params)?;
        let grid = s.params.grid;
        Ok(Instance::Finite(build_named(map, s, |phi, spec| {
            let mu = match spec {
                MeasureSpec::Uniform => PointMeasure::uniform(phi.len()),
                MeasureSpec::Weights { weights } => {
                    PointMeasure::new(&weights.iter().map(|w| parse_rational(w)).collect::<Result<Vec<_>>>()?)?
                }
                MeasureSpec::Counts { counts } => PointMeasure::from_counts(counts)?,
                MeasureSpec::Invariant => find_invariant_measure(phi)?,
                MeasureSpec::GridLebesgue => IntervalMeasure::lebesgue().grid_weights(grid)?,
                _ => return Err(Error::Config("finite measures are uniform, weights, counts, invariant or grid-lebesgue".into())),
            };
            mu.check_carrier(&phi.universe())?;
            Ok(mu)
        })?))
    }

    fn run(&self, check: &CheckKind, p: &Params) -> Result<Body> {
        match self {
            Instance::Interval(b) => match b.generic(check, p)? {
                Some(body) => Ok(body),
                None => interval_check(b, check, p),
            },
            Instance::Finite(b) => match b.generic(check, p)? {
                Some(body) => Ok(body),
                None => finite_check(b, check, p),
            },
        }
    }
}

fn strings<T: ToString>(xs: impl IntoIterator<Item = T>) -> Vec<String> {
    xs.into_iter().map(|x| x.to_string()).collect()
}

impl<C, M> Bound<C, M>
where
    C: SetSyntax,
    M: ProbabilityMeasure<C::Set>,
{
    fn partition(&self, name: &str) -> Result<&OrderedPartition<C::Set>> {
        lookup(&self.partitions, "partition", name)
    }

    fn measure(&self, name: &str) -> Result<&M> {
        lookup(&self.measures, "measure", name)
    }

    fn cover(&self, name: &str) -> Result<&Cover<C::Set>> {
        lookup(&self.covers, "cover", name)
    }

    fn card(&self, r: &CardRef) -> Result<usize> {
        if r.n == 0 {
            return Err(Error::Config("refinement index starts at 1".into()));
        }
        let seq = refinement_sequence(&self.map, self.partition(&r.partition)?, r.n)?;
        Ok(seq[r.n - 1].len())
    }

    /// Checks that behave the same on every carrier; `None` hands over to the carrier-specific runner.
    fn generic(&self, check: &CheckKind, p: &Params) -> Result<Option<Body>> {
        let body = match check {
            CheckKind::Disjointify { partition, k, expect } => {
                let d = disjointify(&self.map, self.partition(partition)?, *k);
                let got = strings(d.pieces());
                let passed = match expect {
                    Some(e) => {
                        let want = e.iter().map(|s| self.map.parse_set(s)).collect::<Result<Vec<_>>>()?;
                        Some(want.as_slice() == d.pieces())
                    }
                    None => None,
                };
                Body::new(passed, json!({"card": d.len(), "pieces": got})).with_params([("partition", partition.clone()), ("k", k.to_string())])
            }
            CheckKind::Refinement { partition, depth, expect_cards } => {
                let depth = depth.unwrap_or(p.max_n);
                let seq = refinement_sequence(&self.map, self.partition(partition)?, depth)?;
                let cards: Vec<usize> = seq.iter().map(OrderedPartition::len).collect();
                let rows: Vec<Value> = seq
                    .iter()
                    .enumerate()
                    .map(|(i, q)| json!({"n": i + 1, "card": q.len(), "pieces": strings(q.pieces())}))
                    .collect();
                let csv = crate::estimate::to_csv(
                    &["n", "card"],
                    &cards.iter().enumerate().map(|(i, c)| vec![(i + 1).to_string(), c.to_string()]).collect::<Vec<_>>(),
                );
                Body::new(expect_cards.as_ref().map(|e| *e == cards), json!({"cards": cards, "levels": rows}))
                    .with_params([("partition", partition.clone()), ("depth", depth.to_string())])
                    .table("", csv)
            }
            CheckKind::CardCompare { lhs, rhs, relation } => {
                let (a, b) = (self.card(lhs)?, self.card(rhs)?);
                Body::new(Some(relation.holds(a, b)), json!({"lhs": a, "rhs": b})).with_params([
                    ("lhs", format!("{}@{}", lhs.partition, lhs.n)),
                    ("rhs", format!("{}@{}", rhs.partition, rhs.n)),
                ])
            }
            CheckKind::PartitionEntropy { measure, partition, expect } => {
                let h = partition_entropy(self.measure(measure)?, self.partition(partition)?)?;
                Body::new(expect.map(|e| e.matches(h)), json!({"entropy": h}))
                    .with_params([("measure", measure.clone()), ("partition", partition.clone())])
            }
            CheckKind::ConditionalEntropy { measure, partition, given, expect } => {
                let h = conditional_entropy(self.measure(measure)?, self.partition(partition)?, self.partition(given)?)?;
                Body::new(expect.map(|e| e.matches(h)), json!({"entropy": h})).with_params([
                    ("measure", measure.clone()),
                    ("partition", partition.clone()),
                    ("given", given.clone()),
                ])
            }
            CheckKind::EntropyBound { measure, partition } => {
                let (mu, q) = (self.measure(measure)?, self.partition(partition)?);
                let h = partition_entropy(mu, q)?;
                let nz = nz_count(mu, q);
                Body::new(Some(entropy_bound_check(mu, q)?), json!({"entropy": h, "nz": nz, "log_nz": (nz as f64).ln()}))
                    .with_params([("measure", measure.clone()), ("partition", partition.clone())])
            }
            CheckKind::MetricEntropy { measure, partition, depth, expect } => {
                let depth = depth.unwrap_or(p.max_n);
                let me = metric_entropy_estimate(self.measure(measure)?, &self.map, self.partition(partition)?, depth)?;
                Body::new(expect.map(|e| e.matches(me.estimate.reported)), serde_json::to_value(&me).expect("serializes"))
                    .with_params([("measure", measure.clone()), ("partition", partition.clone()), ("depth", depth.to_string())])
                    .table("", me.to_csv())
            }
            CheckKind::StrongInvariance { measure, family, expect } => {
                let fam = self.map.family(family, p.grid)?;
                let v = verify_strong_invariance(self.measure(measure)?, &self.map, &fam)?;
                Body::new(expect.map(|e| e == v.holds), serde_json::to_value(&v).expect("serializes"))
                    .with_params([("measure", measure.clone()), ("family", fam.description().to_string())])
            }
            CheckKind::StrongInvarianceForms { measure, family } => {
                let fam = self.map.family(family, p.grid)?;
                let e = strong_invariance_forms(self.measure(measure)?, &self.map, &fam)?;
                Body::new(Some(e.equivalent()), serde_json::to_value(&e).expect("serializes"))
                    .with_params([("measure", measure.clone()), ("family", fam.description().to_string())])
            }
            CheckKind::Preimage { set, which, k, expect } => {
                let s = self.map.parse_set(set)?;
                let mut cur = s;
                for _ in 0..*k {
                    cur = match which {
                        PreimageKind::Large => self.map.large_preimage(&cur),
                        PreimageKind::Small => self.map.small_preimage(&cur),
                    };
                }
                let passed = match expect {
                    Some(e) => Some(self.map.parse_set(e)? == cur),
                    None => None,
                };
                Body::new(passed, json!({"preimage": cur.to_string()}))
                    .with_params([("set", set.clone()), ("which", format!("{which:?}").to_lowercase()), ("k", k.to_string())])
            }
            CheckKind::PullbackOpen { cover, j, expect_open } => {
                let a = self.cover(cover)?;
                let (open, witness) = match pullback_cover(&self.map, a, *j) {
                    Ok(_) => (true, Value::Null),
                    Err(Error::NotOpen { member, set }) => (
                        false,
                        json!({"member": member, "cover_set": a.members()[member].to_string(), "preimage": set}),
                    ),
                    Err(e) => return Err(e),
                };
                Body::new(expect_open.map(|e| e == open), json!({"open": open, "witness": witness}))
                    .with_params([("cover", cover.clone()), ("j", j.to_string())])
            }
            _ => return Ok(None),
        };
        Ok(Some(body))
    }
}

fn interval_check(b: &Bound<PlMultiMap, IntervalMeasure>, check: &CheckKind, p: &Params) -> Result<Body> {
    match check {
        CheckKind::Regularity { expect } => {
            let r = b.map.classify_regularity();
            Ok(Body::new(
                expect.map(|e| e == r.class),
                json!({
                    "class": r.class,
                    "usc_failures": strings(&r.usc_failures),
                    "lsc_failures": strings(&r.lsc_failures),
                }),
            ))
        }
        CheckKind::PlSelection { expect, expect_knots } => match pl_selection(&b.map) {
            Ok(f) => {
                let knots_ok = match expect_knots {
                    Some(k) => {
                        let want = k
                            .iter()
                            .map(|[x, y]| Ok((parse_rational(x)?, parse_rational(y)?)))
                            .collect::<Result<Vec<_>>>()?;
                        Some(want.as_slice() == f.knots())
                    }
                    None => None,
                };
                let passed = all_of([Some(*expect == SelectionExpect::Ok), knots_ok]);
                Ok(Body::new(passed, json!({"selection": f, "verified": true})))
            }
            Err(e @ Error::SelectionHypotheses(_)) => Ok(Body::new(
                Some(*expect == SelectionExpect::Error),
                json!({"selection": null, "error": e.to_string()}),
            )),
            Err(e) => Err(e),
        },
        CheckKind::Invariance { measure, method, family, expect } => {
            if *method != InvarianceMethod::Family {
                return Err(finite_only("bruteforce and flow invariance"));
            }
            let spec = family.clone().unwrap_or(FamilySpec::IntervalGrid { m: None });
            let fam = b.map.family(&spec, p.grid)?;
            let v = verify_invariance_on_family(b.measure(measure)?, &b.map, &fam)?;
            Ok(Body::new(expect.map(|e| e == v.invariant), serde_json::to_value(&v).expect("serializes"))
                .with_params([("measure", measure.clone()), ("family", fam.description().to_string())]))
        }
        CheckKind::HPlus { cover, eps, depth, expect } => {
            let depth = depth.unwrap_or(p.max_n);
            let a = match (cover, eps) {
                (Some(name), _) => b.cover(name)?.clone(),
                (None, Some(e)) => crate::cover::ball_cover_interval(&b.map, &parse_rational(e)?)?,
                (None, None) => return Err(Error::Config("h-plus needs a cover or a radius".into())),
            };
            let ce = h_plus_estimate(&b.map, &a, depth, &p.solver())?;
            Ok(Body::new(expect.map(|e| e.matches(ce.estimate.reported)), serde_json::to_value(&ce).expect("serializes"))
                .exact(ce.estimate.exact)
                .with_params([("depth", depth.to_string()), ("cover_size", a.len().to_string())])
                .table("", ce.to_csv()))
        }
        other => Err(finite_only(other.name())),
    }
}

fn level_checks(oe: &OrbitEntropy, expect: &[LevelExpect]) -> Result<Option<bool>> {
    let mut parts = vec![Some(oe.levels.iter().all(|l| l.span_le_sep))];
    for e in expect {
        let eps = parse_rational(&e.eps)?;
        let level = oe.level(&eps).ok_or_else(|| Error::Config(format!("ε = {eps} not in the ladder")))?;
        let got = match e.n {
            Some(n) => level.sep.at(n).ok_or_else(|| Error::Config(format!("depth {n} not computed")))?,
            None => level.sep.reported,
        };
        parts.push(Some((got - e.value).abs() <= e.tol));
    }
    Ok(all_of(parts))
}

fn orbit_body(oe: &OrbitEntropy, expect: &[LevelExpect], ladder: &[Rational], depth: usize) -> Result<Body> {
    let exact = oe.rows.iter().all(|r| r.exact);
    Ok(Body::new(level_checks(oe, expect)?, serde_json::to_value(oe).expect("serializes"))
        .exact(exact)
        .with_params([("eps_ladder", strings(ladder).join(" ")), ("depth", depth.to_string())])
        .table("", oe.to_csv()))
}

fn finite_check(b: &Bound<FiniteRelation, PointMeasure>, check: &CheckKind, p: &Params) -> Result<Body> {
    let cfg = p.orbit();
    match check {
        CheckKind::Invariance { measure, method, family, expect } => {
            let mu = b.measure(measure)?;
            let v = match method {
                InvarianceMethod::Bruteforce => verify_invariance_bruteforce(mu, &b.map)?,
                InvarianceMethod::Flow => verify_invariance_flow(mu, &b.map)?,
                InvarianceMethod::Family => {
                    let spec = family.clone().unwrap_or(FamilySpec::AllSubsets);
                    let fam = b.map.family(&spec, p.grid)?;
                    verify_invariance_on_family(mu, &b.map, &fam)?
                }
            };
            Ok(Body::new(expect.map(|e| e == v.invariant), serde_json::to_value(&v).expect("serializes"))
                .with_params([("measure", measure.clone()), ("method", format!("{method:?}").to_lowercase())]))
        }
        CheckKind::FindInvariant { expect } => {
            let mu = find_invariant_measure(&b.map)?;
            let weights = strings(mu.weights());
            let verified = verify_invariance_flow(&mu, &b.map)?.invariant;
            let matches = match expect {
                Some(e) => {
                    let want = e.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
                    Some(want == mu.weights())
                }
                None => None,
            };
            Ok(Body::new(all_of([Some(verified), matches]), json!({"weights": weights, "invariant": verified})))
        }
        CheckKind::HKt { eps_ladder, depth, expect } => {
            let (ladder, depth) = (p.ladder(eps_ladder)?, depth.unwrap_or(p.max_n));
            orbit_body(&h_kt_estimate(&b.map, &ladder, depth, &cfg)?, expect, &ladder, depth)
        }
        CheckKind::HCm { eps_ladder, depth, expect } => {
            let (ladder, depth) = (p.ladder(eps_ladder)?, depth.unwrap_or(p.max_n));
            orbit_body(&h_cm_estimate(&b.map, &ladder, depth, &cfg)?, expect, &ladder, depth)
        }
        CheckKind::Hyperspace { eps_ladder, depth, expect } => {
            let (ladder, depth) = (p.ladder(eps_ladder)?, depth.unwrap_or(p.max_n));
            orbit_body(&hyperspace_entropy(&b.map, &ladder, depth, p.hyperspace_cap, &cfg)?, expect, &ladder, depth)
        }
        CheckKind::HPlus { cover, eps, depth, expect } => {
            let depth = depth.unwrap_or(p.max_n);
            let a = match (cover, eps) {
                (Some(name), _) => b.cover(name)?.clone(),
                (None, Some(e)) => ball_cover_finite(&b.map, &parse_rational(e)?)?,
                (None, None) => ball_cover_finite(&b.map, &p.ladder(&None)?[0])?,
            };
            let ce = h_plus_estimate(&b.map, &a, depth, &p.solver())?;
            Ok(Body::new(expect.map(|e| e.matches(ce.estimate.reported)), serde_json::to_value(&ce).expect("serializes"))
                .exact(ce.estimate.exact)
                .with_params([("depth", depth.to_string()), ("cover_size", a.len().to_string())])
                .table("", ce.to_csv()))
        }
        CheckKind::IterateRefinement { cover, n, k } => {
            let r = iterate_refinement_check(&b.map, b.cover(cover)?, *n, *k, &p.solver())?;
            Ok(Body::new(Some(r.holds()), serde_json::to_value(&r).expect("serializes"))
                .exact(r.exact)
                .with_params([("cover", cover.clone()), ("n", n.to_string()), ("k", k.to_string())]))
        }
        CheckKind::Sandwich { measures, partitions, eps_ladder, depth } => {
            let (ladder, depth) = (p.ladder(eps_ladder)?, depth.unwrap_or(p.max_n));
            let mus = measures.iter().map(|m| b.measure(m).cloned()).collect::<Result<Vec<_>>>()?;
            let parts = partitions.iter().map(|q| b.partition(q).cloned()).collect::<Result<Vec<_>>>()?;
            let scfg = SandwichConfig {
                orbit: cfg,
                selection_cap: p.selection_cap,
                seed: p.seed,
            };
            let r = sandwich_report(&b.map, &mus, &parts, &ladder, depth, &scfg)?;
            let exact = r.table.iter().all(|q| q.exact);
            Ok(Body::new(Some(r.asserted_hold()), serde_json::to_value(&r).expect("serializes"))
                .exact(exact)
                .with_params([
                    ("eps_ladder", strings(&ladder).join(" ")),
                    ("depth", depth.to_string()),
                    ("measures", measures.join(" ")),
                    ("partitions", partitions.join(" ")),
                ])
                .table("-records", r.records_csv())
                .table("-table", r.table_csv()))
        }
        other => Err(Error::Config(format!("{} needs the interval carrier", other.name()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_builtin(name: &str) -> RunOutcome {
        run_scenario_text(builtin(name).unwrap(), &Overrides::default()).unwrap()
    }

    #[test]
    fn builtins_parse_and_pass() {
        for (name, text) in BUILTINS {
            let s = parse_scenario(text).unwrap();
            assert_eq!(s.name, *name);
            let out = run_scenario(&s).unwrap();
            let failed: Vec<_> = out.report.checks.iter().filter(|c| matches!(c.status, CheckStatus::Fail | CheckStatus::Error)).collect();
            assert!(failed.is_empty(), "{name}: {failed:#?}");
            assert_eq!(out.exit_status(), ExitStatus::Pass);
        }
    }

    #[test]
    fn tent_counterexample_values() {
        let out = run_builtin("tent-counterexample");
        let by_id = |id: &str| out.report.checks.iter().find(|c| c.id == id).unwrap();
        assert_eq!(by_id("p-tilde-1").result["pieces"], json!(["[0,1/4] u [3/4,1]", "(1/4,3/4)"]));
        assert_eq!(by_id("beta-tilde-1").result["pieces"], json!(["[0,1]"]));
        assert_eq!(by_id("card-p2-gt-beta2").result, json!({"lhs": 4, "rhs": 3}));
    }

    #[test]
    fn reports_are_deterministic() {
        let a = run_builtin("full-shift-2");
        let b = run_builtin("full-shift-2");
        assert_eq!(a.report_json(), b.report_json());
        assert_eq!(a.tables, b.tables);
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let err = parse_scenario("{\"name\": 3}").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        assert_eq!(ExitStatus::of_error(&err), ExitStatus::ParseError);
        let bad_set = r#"{"name":"x","carrier":{"kind":"interval"},"map":{"kind":"preset","name":"identity"},
            "partitions":{"P":["[0,1/2"]},"checks":[]}"#;
        assert!(matches!(run_scenario_text(bad_set, &Overrides::default()), Err(Error::Parse { .. })));
        let unknown = r#"{"name":"x","carrier":{"kind":"interval"},"map":{"kind":"preset","name":"nope"},"checks":[]}"#;
        assert_eq!(ExitStatus::of_error(&run_scenario_text(unknown, &Overrides::default()).unwrap_err()), ExitStatus::ParseError);
    }

    #[test]
    fn failing_assertion_exits_one() {
        let text = r#"{"name":"x","carrier":{"kind":"discrete","size":2},"map":{"kind":"function","values":[1,1]},
            "measures":{"u":{"kind":"uniform"}},
            "checks":[{"kind":"invariance","measure":"u","method":"flow","expect":true}]}"#;
        let out = run_scenario_text(text, &Overrides::default()).unwrap();
        assert_eq!(out.exit_status(), ExitStatus::AssertionFailure);
        assert_eq!(out.exit_status().code(), 1);
    }

    #[test]
    fn cap_overflow_exits_three() {
        let text = r#"{"name":"x","carrier":{"kind":"discrete","size":3},"map":{"kind":"preset","name":"full"},
            "params":{"orbit_cap":10},
            "checks":[{"kind":"h-kt","depth":4}]}"#;
        let out = run_scenario_text(text, &Overrides::default()).unwrap();
        assert_eq!(out.exit_status(), ExitStatus::CapOverflow);
        assert_eq!(out.report.checks[0].status, CheckStatus::Error);
    }

    #[test]
    fn overrides_apply() {
        let o = Overrides {
            max_n: Some(3),
            eps_ladder: Some(vec!["1/4".into()]),
            ..Overrides::default()
        };
        let out = run_scenario_text(builtin("full-shift-2").unwrap(), &o).unwrap();
        assert_eq!(out.report.params.max_n, 3);
        assert_eq!(out.report.params.eps_ladder, vec!["1/4".to_string()]);
    }

    #[test]
    fn tables_written() {
        let dir = std::env::temp_dir().join(format!("mventropy-scenario-{}", std::process::id()));
        let out = run_builtin("full-shift-2");
        out.write_to(&dir).unwrap();
        let report = std::fs::read_to_string(dir.join("report.json")).unwrap();
        assert_eq!(report, out.report_json());
        for (name, csv) in &out.tables {
            assert_eq!(&std::fs::read_to_string(dir.join(name)).unwrap(), csv);
        }
        std::fs::remove_dir_all(dir).unwrap();
    }
}
