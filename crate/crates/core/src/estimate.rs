use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::Rational;

/// One level `n` of an entropy sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelValue {
    pub n: usize,
    pub value: f64,
    /// The count behind `value` was computed exactly.
    pub exact: bool,
}

/// A finite-depth entropy sequence with a limsup proxy.
///
/// `values` holds levels `1..=N` in order; `reported` is the maximum over the
/// tail `n ≥ ⌈N/2⌉`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyEstimate {
    pub values: Vec<LevelValue>,
    pub reported: f64,
    /// Every level is exact.
    pub exact: bool,
    pub params: BTreeMap<String, String>,
}

impl EntropyEstimate {
    /// Builds an estimate from the values at levels `1..=values.len()`.
    pub fn from_levels(levels: Vec<(f64, bool)>, params: BTreeMap<String, String>) -> Self {
        let values: Vec<LevelValue> = levels
            .into_iter()
            .enumerate()
            .map(|(i, (value, exact))| LevelValue { n: i + 1, value, exact })
            .collect();
        let tail_start = values.len().div_ceil(2).max(1);
        let reported = values
            .iter()
            .filter(|v| v.n >= tail_start)
            .map(|v| v.value)
            .fold(f64::NEG_INFINITY, f64::max);
        let reported = if values.is_empty() { 0.0 } else { reported };
        let exact = values.iter().all(|v| v.exact);
        EntropyEstimate {
            values,
            reported,
            exact,
            params,
        }
    }

    pub fn depth(&self) -> usize {
        self.values.len()
    }

    pub fn at(&self, n: usize) -> Option<f64> {
        self.values.get(n.checked_sub(1)?).map(|v| v.value)
    }
}

/// `(1/n) log count` with the convention that a count of 0 or 1 gives 0.
pub fn growth_rate(count: usize, n: usize) -> f64 {
    if count <= 1 {
        0.0
    } else {
        (count as f64).ln() / n as f64
    }
}

/// Builds a parameter map from `(key, value)` pairs.
pub fn params<K: Into<String>, V: ToString>(pairs: impl IntoIterator<Item = (K, V)>) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.into(), v.to_string())).collect()
}

/// Serializes a rational as its exact `p/q` string.
pub fn ser_rational<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

/// Renders a header and rows as CSV; fields with separators are quoted.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("fields are UTF-8")
}
