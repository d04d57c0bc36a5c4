use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use super::{decode_num, flags, num, round_sig, Measurement, MeasurementReport};
use crate::{Error, Result};

/// One numeric leaf of a measurement compared across two reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    /// Measurement name, with `.field` suffixes for structured values.
    pub measurement: String,
    #[serde(with = "opt_float")]
    pub baseline: Option<f64>,
    #[serde(with = "opt_float")]
    pub candidate: Option<f64>,
    /// `candidate − baseline`.
    #[serde(with = "opt_float")]
    pub absolute_delta: Option<f64>,
    /// `(candidate − baseline) / |baseline|`; absent when the baseline is 0.
    #[serde(with = "opt_float")]
    pub relative_delta: Option<f64>,
    pub comparable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchDelta {
    pub baseline_ref: String,
    pub candidate_ref: String,
    pub rows: Vec<DeltaRow>,
    pub n_comparable: usize,
    pub n_incomparable: usize,
}

mod opt_float {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(x) => num(*x).serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
        let v = Option::<Value>::deserialize(d)?;
        Ok(v.as_ref().and_then(decode_num))
    }
}

/// Numeric leaves of a value: `prefix` for scalars, `prefix.key` for object
/// fields. Arrays and free-text strings are not compared.
fn leaves(prefix: &str, v: &Value, out: &mut BTreeMap<String, f64>) {
    match v {
        Value::Object(o) => {
            for (k, v) in o {
                leaves(&format!("{prefix}.{k}"), v, out);
            }
        }
        Value::Array(_) | Value::Null | Value::Bool(_) => {}
        other => {
            if let Some(x) = decode_num(other) {
                out.insert(prefix.to_owned(), x);
            }
        }
    }
}

fn status(m: &Measurement) -> Option<&'static str> {
    if m.is_skipped() {
        Some(flags::SKIPPED)
    } else if m.is_failed() {
        Some(flags::FAILED)
    } else {
        None
    }
}

fn params_diff(a: &Measurement, b: &Measurement) -> Option<String> {
    let keys: std::collections::BTreeSet<&String> = a.params.keys().chain(b.params.keys()).collect();
    let differing: Vec<&str> = keys
        .into_iter()
        .filter(|k| a.params.get(*k) != b.params.get(*k))
        .map(String::as_str)
        .collect();
    (!differing.is_empty()).then(|| format!("params differ: {}", differing.join(", ")))
}

/// Per-measurement deltas from `baseline` to `candidate`.
///
/// A row is comparable only when both values are finite and the generating
/// params are identical; otherwise it carries the reason.
pub fn compare(baseline: &MeasurementReport, candidate: &MeasurementReport) -> Result<BatchDelta> {
    if baseline.schema_major() != candidate.schema_major() {
        return Err(Error::SchemaMismatch {
            baseline: baseline.schema_version.clone(),
            candidate: candidate.schema_version.clone(),
        });
    }
    let names: std::collections::BTreeSet<&String> =
        baseline.measurements.keys().chain(candidate.measurements.keys()).collect();
    let mut rows = Vec::new();
    for name in names {
        let (b, c) = (baseline.measurements.get(name), candidate.measurements.get(name));
        let (b, c) = match (b, c) {
            (Some(b), Some(c)) => (b, c),
            (b, _) => {
                let missing = if b.is_none() { "baseline" } else { "candidate" };
                let present = b.or(c).expect("name comes from one of the reports");
                let mut lv = BTreeMap::new();
                leaves(name, &present.value, &mut lv);
                if lv.is_empty() {
                    lv.insert(name.clone(), f64::NAN);
                }
                for (path, x) in lv {
                    let x = x.is_finite().then_some(x);
                    rows.push(incomparable(path, if b.is_some() { x } else { None }, if b.is_none() { x } else { None }, format!("missing in {missing}")));
                }
                continue;
            }
        };
        if status(b).is_some() && status(c).is_some() {
            // neither side has a value
            continue;
        }
        if let Some(s) = status(b).or(status(c)) {
            let side = if status(b).is_some() { "baseline" } else { "candidate" };
            rows.push(incomparable(name.clone(), None, None, format!("{s} in {side}")));
            continue;
        }
        let diff = params_diff(b, c);
        let (mut lb, mut lc) = (BTreeMap::new(), BTreeMap::new());
        leaves(name, &b.value, &mut lb);
        leaves(name, &c.value, &mut lc);
        let paths: std::collections::BTreeSet<String> = lb.keys().chain(lc.keys()).cloned().collect();
        for path in paths {
            let (vb, vc) = (lb.get(&path).copied(), lc.get(&path).copied());
            let reason = match (&diff, vb, vc) {
                (Some(d), _, _) => Some(d.clone()),
                (None, None, _) => Some("missing in baseline".to_owned()),
                (None, _, None) => Some("missing in candidate".to_owned()),
                (None, Some(x), Some(y)) if !x.is_finite() || !y.is_finite() => Some("non-finite value".to_owned()),
                _ => None,
            };
            match reason {
                Some(r) => rows.push(incomparable(path, vb, vc, r)),
                None => {
                    let (x, y) = (vb.unwrap(), vc.unwrap());
                    let delta = y - x;
                    rows.push(DeltaRow {
                        measurement: path,
                        baseline: Some(x),
                        candidate: Some(y),
                        absolute_delta: Some(delta),
                        relative_delta: (x != 0.0).then(|| delta / x.abs()),
                        comparable: true,
                        reason: None,
                    });
                }
            }
        }
    }
    let n_comparable = rows.iter().filter(|r| r.comparable).count();
    Ok(BatchDelta {
        baseline_ref: baseline.corpus_fingerprint.clone(),
        candidate_ref: candidate.corpus_fingerprint.clone(),
        n_incomparable: rows.len() - n_comparable,
        n_comparable,
        rows,
    })
}

fn incomparable(measurement: String, baseline: Option<f64>, candidate: Option<f64>, reason: String) -> DeltaRow {
    DeltaRow {
        measurement,
        baseline,
        candidate,
        absolute_delta: None,
        relative_delta: None,
        comparable: false,
        reason: Some(reason),
    }
}

impl BatchDelta {
    pub fn row(&self, measurement: &str) -> Option<&DeltaRow> {
        self.rows.iter().find(|r| r.measurement == measurement)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("deltas are always serializable");
        s.push('\n');
        s
    }

    /// Aligned text table, one row per compared value.
    pub fn to_table(&self) -> String {
        let fmt = |x: Option<f64>| match x {
            None => "-".to_owned(),
            Some(x) => match num(x) {
                Value::String(s) => s,
                v => v.to_string(),
            },
        };
        let header = ["measurement", "baseline", "candidate", "delta", "relative", "note"];
        let mut cells: Vec<[String; 6]> = vec![header.map(str::to_owned)];
        for r in &self.rows {
            cells.push([
                r.measurement.clone(),
                fmt(r.baseline),
                fmt(r.candidate),
                fmt(r.absolute_delta),
                fmt(r.relative_delta.map(round_sig)),
                r.reason.clone().map_or_else(String::new, |s| format!("incomparable: {s}")),
            ]);
        }
        let mut widths = [0usize; 6];
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = format!("baseline:  {}\ncandidate: {}\n", self.baseline_ref, self.candidate_ref);
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .zip(widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 || i == 5 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out.push_str(&format!("{} comparable, {} incomparable\n", self.n_comparable, self.n_incomparable));
        out
    }
}
