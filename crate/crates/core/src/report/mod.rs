//! Measurement reports and batch-over-batch comparison.
//!
//! A [`MeasurementReport`] is the serialized record of every measurement
//! taken on a corpus: value, generating parameters, unit, flags and
//! provenance. Reports serialize deterministically: keys sorted, floats
//! rounded to 12 significant digits, and non-finite values written as string
//! flags (`"inf"`, `"-inf"`, `"undefined"`) rather than JSON literals.

mod assemble;
mod compare;

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result};

pub use assemble::{assemble_report, ReportConfig, ReportInputs};
pub use compare::{compare, BatchDelta, DeltaRow};

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricFamily {
    Distance,
    Density,
    Diversity,
    Tendency,
    Association,
    Quality,
}

impl MetricFamily {
    pub const ALL: [MetricFamily; 6] = [
        MetricFamily::Distance,
        MetricFamily::Density,
        MetricFamily::Diversity,
        MetricFamily::Tendency,
        MetricFamily::Association,
        MetricFamily::Quality,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricFamily::Distance => "distance",
            MetricFamily::Density => "density",
            MetricFamily::Diversity => "diversity",
            MetricFamily::Tendency => "tendency",
            MetricFamily::Association => "association",
            MetricFamily::Quality => "quality",
        }
    }

    pub fn valid_names() -> String {
        let mut names: Vec<&str> = Self::ALL.iter().map(|f| f.as_str()).collect();
        names.push("all");
        names.join(", ")
    }

    /// Parses a comma-separated selection; `all` expands to every family.
    pub fn parse_list(s: &str) -> Result<Vec<MetricFamily>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(Self::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(Error::arg(format!(
                "empty metric selection (valid: {})",
                Self::valid_names()
            )));
        }
        Ok(out)
    }
}

impl FromStr for MetricFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::arg(format!("unknown metric {s:?} (valid: {})", Self::valid_names())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Computed from the corpus alone.
    SelfContained,
    /// Depends on an external model (supplied embeddings or log-probabilities).
    ExternalModel,
}

/// Flag names used in reports.
pub mod flags {
    pub const INFINITE: &str = "infinite";
    pub const NEGATIVE_INFINITE: &str = "negative-infinite";
    pub const UNDEFINED: &str = "undefined";
    pub const LOW_CONFIDENCE: &str = "low-confidence";
    pub const BOUNDARY: &str = "at-boundary";
    pub const SKIPPED: &str = "skipped";
    pub const FAILED: &str = "failed";
    pub const DEGENERATE: &str = "degenerate";
    pub const CONVENTION: &str = "by-convention";
    pub const HEURISTIC: &str = "english-orthographic-heuristic";
}

/// One named measurement. Field order is alphabetical so serialization is sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub flags: Vec<String>,
    pub params: BTreeMap<String, Value>,
    pub provenance: Provenance,
    pub unit: String,
    pub value: Value,
}

impl Measurement {
    pub fn new(value: Value, unit: impl Into<String>) -> Self {
        Measurement {
            detail: None,
            flags: Vec::new(),
            params: BTreeMap::new(),
            provenance: Provenance::SelfContained,
            unit: unit.into(),
            value,
        }
    }

    /// A scalar; non-finite values also raise the matching flag.
    pub fn scalar(x: f64, unit: impl Into<String>) -> Self {
        let mut m = Measurement::new(num(x), unit);
        m.flag_non_finite(x);
        m
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_owned(), value.into());
        self
    }

    pub fn flag(mut self, flag: &str) -> Self {
        self.push_flag(flag);
        self
    }

    pub fn push_flag(&mut self, flag: &str) {
        if !self.flags.iter().any(|f| f == flag) {
            self.flags.push(flag.to_owned());
            self.flags.sort();
        }
    }

    pub fn flag_non_finite(&mut self, x: f64) {
        if x == f64::INFINITY {
            self.push_flag(flags::INFINITE);
        } else if x == f64::NEG_INFINITY {
            self.push_flag(flags::NEGATIVE_INFINITE);
        } else if x.is_nan() {
            self.push_flag(flags::UNDEFINED);
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    pub fn external(mut self) -> Self {
        self.provenance = Provenance::ExternalModel;
        self
    }

    pub fn is_skipped(&self) -> bool {
        self.flags.iter().any(|f| f == flags::SKIPPED)
    }

    pub fn is_failed(&self) -> bool {
        self.flags.iter().any(|f| f == flags::FAILED)
    }
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// JSON encoding of a float: 12 significant digits, string flags for non-finite values.
pub fn num(x: f64) -> Value {
    if x.is_nan() {
        Value::String("undefined".into())
    } else if x == f64::INFINITY {
        Value::String("inf".into())
    } else if x == f64::NEG_INFINITY {
        Value::String("-inf".into())
    } else {
        let r = round_sig(x);
        // -0.0 would serialize as "-0.0"
        Value::from(if r == 0.0 { 0.0 } else { r })
    }
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or_else(|| Value::String("undefined".into()), num)
}

/// Decodes a float written by [`num`].
pub fn decode_num(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => match s.as_str() {
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "undefined" => Some(f64::NAN),
            _ => None,
        },
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementReport {
    pub corpus_fingerprint: String,
    pub created_at: String,
    pub measurements: BTreeMap<String, Measurement>,
    pub schema_version: String,
    pub tokenizer_config: String,
}

impl MeasurementReport {
    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values are always serializable");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: 0,
            message: e.to_string(),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn schema_major(&self) -> &str {
        self.schema_version.split('.').next().unwrap_or("")
    }

    pub fn get(&self, name: &str) -> Option<&Measurement> {
        self.measurements.get(name)
    }

    pub fn failures(&self) -> impl Iterator<Item = (&String, &Measurement)> {
        self.measurements.iter().filter(|(_, m)| m.is_failed())
    }
}

/// One-line human summary of a measurement.
pub fn summary_line(name: &str, m: &Measurement) -> String {
    let value = match &m.value {
        Value::Null => "-".to_owned(),
        Value::Object(map) => {
            let keys = ["value", "mean", "global_density", "alpha", "perplexity", "n_distinct", "nats", "entropy", "log_density", "vendi"];
            keys.iter()
                .find_map(|k| map.get(*k).map(|v| format!("{k}={}", compact(v))))
                .unwrap_or_else(|| format!("{{{} fields}}", map.len()))
        }
        v => compact(v),
    };
    let mut line = format!("{name:<44} {value}");
    if !m.unit.is_empty() && !matches!(m.value, Value::Null) {
        line.push(' ');
        line.push_str(&m.unit);
    }
    if !m.flags.is_empty() {
        line.push_str(&format!(" [{}]", m.flags.join(",")));
    }
    if let Some(d) = &m.detail {
        if m.is_skipped() || m.is_failed() {
            line.push_str(&format!(" ({d})"));
        }
    }
    line
}

fn compact(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(123456.7890123456), 123456.789012);
        assert_eq!(num(2.0 / 3.0).to_string(), "0.666666666667");
        assert_eq!(num(-0.0).to_string(), "0.0");
        assert_eq!(num(f64::INFINITY), Value::String("inf".into()));
        assert_eq!(num(f64::NEG_INFINITY), Value::String("-inf".into()));
        assert_eq!(num(f64::NAN), Value::String("undefined".into()));
        assert_eq!(decode_num(&num(f64::NEG_INFINITY)), Some(f64::NEG_INFINITY));
    }

    #[test]
    fn metric_selection_parsing() {
        assert_eq!(
            MetricFamily::parse_list("tendency, diversity").unwrap(),
            [MetricFamily::Diversity, MetricFamily::Tendency]
        );
        assert_eq!(MetricFamily::parse_list("all").unwrap().len(), 6);
        let err = MetricFamily::parse_list("tendency,bogus").unwrap_err().to_string();
        assert!(err.contains("bogus") && err.contains("quality"), "{err}");
        assert!(MetricFamily::parse_list(" , ").is_err());
    }

    #[test]
    fn measurement_flags_are_sorted_and_unique() {
        let m = Measurement::scalar(f64::INFINITY, "nats").flag("low-confidence").flag("infinite");
        assert_eq!(m.flags, ["infinite", "low-confidence"]);
    }

    #[test]
    fn report_json_is_sorted() {
        let mut measurements = BTreeMap::new();
        measurements.insert("b".to_string(), Measurement::scalar(1.5, "x").param("z", 1).param("a", 2));
        measurements.insert("a".to_string(), Measurement::scalar(f64::NAN, "x"));
        let r = MeasurementReport {
            corpus_fingerprint: "f".into(),
            created_at: "t".into(),
            measurements,
            schema_version: SCHEMA_VERSION.into(),
            tokenizer_config: "unicode-word+fold".into(),
        };
        let json = r.to_json();
        let pos = |k: &str| json.find(k).unwrap();
        assert!(pos("\"corpus_fingerprint\"") < pos("\"created_at\""));
        assert!(pos("\"created_at\"") < pos("\"measurements\""));
        assert!(pos("\"measurements\"") < pos("\"schema_version\""));
        assert!(pos("\"a\": {") < pos("\"b\": {"));
        assert!(!json.contains("NaN") && json.contains("\"undefined\""));
        assert_eq!(MeasurementReport::from_json(&json).unwrap().to_json(), json);
    }
}
