//! Browser bindings. Each export has a plain Rust twin returning
//! `Result<String, String>` with a JSON payload, so the logic is testable natively.

use std::sync::Arc;

use mventropy::orbit::{h_cm_estimate, h_kt_estimate, OrbitConfig};
use mventropy::presets::{pl_by_name, PL_PRESETS};
use mventropy::scenario::{builtin, run_scenario_text, Overrides, BUILTINS};
use mventropy::{rat, Carrier, FiniteMetricSpace, FiniteRelation, IntervalSet, Rational};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Deepest orbit length the page may request; orbit counts grow exponentially.
pub const MAX_DEPTH: usize = 8;
pub const MAX_POINTS: usize = 8;

fn message(e: mventropy::Error) -> String {
    e.to_string()
}

/// Names of the built-in scenarios and of the interval map presets.
pub fn catalog() -> String {
    let scenarios: Vec<&str> = BUILTINS.iter().map(|(name, _)| *name).collect();
    json!({"scenarios": scenarios, "maps": PL_PRESETS}).to_string()
}

/// Runs a built-in scenario by name, or scenario JSON pasted by the user.
pub fn scenario_report(source: &str) -> Result<String, String> {
    let source = source.trim();
    let text = builtin(source).unwrap_or(source);
    let outcome = run_scenario_text(text, &Overrides::default()).map_err(message)?;
    Ok(outcome.report_json())
}

/// Value, both preimages and regularity of a preset interval map at a set literal.
pub fn preimages(map: &str, set: &str) -> Result<String, String> {
    let phi = pl_by_name(map).ok_or_else(|| format!("unknown map {map:?}"))?;
    let b: IntervalSet = set.parse().map_err(message)?;
    let large = phi.large_preimage(&b);
    let small = phi.small_preimage(&b);
    let regularity = phi.classify_regularity();
    Ok(json!({
        "set": b.to_string(),
        "large": large.to_string(),
        "large_open": phi.is_open(&large),
        "small": small.to_string(),
        "small_open": phi.is_open(&small),
        "regularity": regularity.class,
        "usc_failures": regularity.usc_failures.iter().map(Rational::to_string).collect::<Vec<_>>(),
        "lsc_failures": regularity.lsc_failures.iter().map(Rational::to_string).collect::<Vec<_>>(),
    })
    .to_string())
}

/// Parses `1,2; 0; 2` as the relation `0 → {1,2}, 1 → {0}, 2 → {2}` on the
/// points `i/(n-1)` of the line.
fn parse_relation(images: &str) -> Result<FiniteRelation, String> {
    let lists: Vec<Vec<usize>> = images
        .split(';')
        .map(|part| {
            part.split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>().map_err(|_| format!("bad point index {t:?}")))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let n = lists.len();
    if n > MAX_POINTS {
        return Err(format!("at most {MAX_POINTS} points"));
    }
    let last = (n as i128 - 1).max(1);
    let xs: Vec<Rational> = (0..n as i128).map(|i| rat(i, last)).collect();
    let space = FiniteMetricSpace::on_line(&xs).map_err(message)?;
    FiniteRelation::from_lists(Arc::new(space), &lists).map_err(message)
}

/// Separated and spanning counts of orbits and of the bottleneck pseudometric.
pub fn orbit_table(images: &str, eps: &str, depth: usize) -> Result<String, String> {
    let phi = parse_relation(images)?;
    let eps = mventropy::interval::parse_rational(eps).map_err(message)?;
    if !(1..=MAX_DEPTH).contains(&depth) {
        return Err(format!("depth must be between 1 and {MAX_DEPTH}"));
    }
    let cfg = OrbitConfig::default();
    let kt = h_kt_estimate(&phi, &[eps], depth, &cfg).map_err(message)?;
    let cm = h_cm_estimate(&phi, &[eps], depth, &cfg).map_err(message)?;
    Ok(json!({"kt": kt.rows, "cm": cm.rows}).to_string())
}

#[wasm_bindgen(js_name = catalog)]
pub fn catalog_js() -> String {
    catalog()
}

#[wasm_bindgen(js_name = scenarioReport)]
pub fn scenario_report_js(source: &str) -> Result<String, JsValue> {
    scenario_report(source).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = preimages)]
pub fn preimages_js(map: &str, set: &str) -> Result<String, JsValue> {
    preimages(map, set).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = orbitTable)]
pub fn orbit_table_js(images: &str, eps: &str, depth: usize) -> Result<String, JsValue> {
    orbit_table(images, eps, depth).map_err(|e| JsValue::from_str(&e))
}
