//! Run configuration files.
//!
//! Plain `key = value` lines grouped under `[section]` headers; `#` and `;`
//! start comments. Keys are addressed as `section.key`. Unknown sections or
//! keys are rejected so a typo never silently falls back to a default.
//!
//! ```text
//! [input]
//! format = jsonl
//! tokenizer = unicode-word+fold
//!
//! [metrics]
//! select = tendency, diversity
//!
//! [density]
//! k = 10
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::report::ReportConfig;
use crate::{Error, Result};

const KNOWN_KEYS: &[&str] = &[
    "input.path",
    "input.format",
    "input.tokenizer",
    "input.text_field",
    "input.id_field",
    "input.timestamp_field",
    "input.attributes",
    "output.path",
    "metrics.select",
    "inputs.embeddings",
    "inputs.embedding_model",
    "inputs.targets",
    "inputs.logprobs",
    "tendency.zipf_method",
    "tendency.lm_order",
    "tendency.lm_smoothing",
    "tendency.burstiness_token",
    "diversity.ngram_orders",
    "diversity.ngram_denominator",
    "density.k",
    "density.similarity",
    "density.volume_mode",
    "association.top_k",
    "association.smoothing",
    "association.context",
    "association.weighting",
    "quality.dedup_top",
    "report.created_at",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    path: PathBuf,
    values: BTreeMap<String, (usize, String)>,
}

impl ConfigFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let err = |line: usize, message: String| Error::Parse {
            path: path.clone(),
            line,
            message,
        };
        let mut section = String::new();
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line_no, format!("unterminated section header {line:?}")))?;
                section = name.trim().to_owned();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(line_no, format!("expected `key = value`, got {line:?}")))?;
            let key = format!("{section}.{}", k.trim());
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(err(line_no, format!("unknown key {key:?}")));
            }
            if values.insert(key.clone(), (line_no, v.trim().to_owned())).is_some() {
                return Err(err(line_no, format!("duplicate key {key:?}")));
            }
        }
        Ok(ConfigFile { path, values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(_, v)| v.as_str())
    }

    /// Parses `key`, naming the file and line on failure.
    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|e| Error::Parse {
                path: self.path.clone(),
                line: *line,
                message: format!("{key}: {e}"),
            }),
        }
    }

    pub fn path_value(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|p| {
            let p = PathBuf::from(p);
            match self.path.parent() {
                Some(dir) if p.is_relative() => dir.join(p),
                _ => p,
            }
        })
    }

    pub fn list(&self, key: &str) -> Option<Vec<String>> {
        self.get(key).map(|v| {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_owned)
                .collect()
        })
    }

    /// Applies every measurement parameter present in the file to `cfg`.
    pub fn apply(&self, cfg: &mut ReportConfig) -> Result<()> {
        if let Some(orders) = self.get("diversity.ngram_orders") {
            cfg.ngram_orders = parse_orders(orders).map_err(|e| self.at("diversity.ngram_orders", e))?;
        }
        set(&mut cfg.ngram_denominator, self.parsed("diversity.ngram_denominator")?);
        set(&mut cfg.zipf_method, self.parsed("tendency.zipf_method")?);
        set(&mut cfg.lm_order, self.parsed("tendency.lm_order")?);
        set(&mut cfg.lm_smoothing, self.parsed("tendency.lm_smoothing")?);
        if let Some(t) = self.get("tendency.burstiness_token") {
            cfg.burstiness_token = Some(t.to_owned());
        }
        set(&mut cfg.knn_k, self.parsed("density.k")?);
        set(&mut cfg.similarity, self.parsed("density.similarity")?);
        set(&mut cfg.volume_mode, self.parsed("density.volume_mode")?);
        set(&mut cfg.top_k, self.parsed("association.top_k")?);
        set(&mut cfg.assoc_smoothing, self.parsed("association.smoothing")?);
        set(&mut cfg.context_mode, self.parsed("association.context")?);
        set(&mut cfg.weighting, self.parsed("association.weighting")?);
        set(&mut cfg.dedup_top, self.parsed("quality.dedup_top")?);
        if let Some(t) = self.get("report.created_at") {
            cfg.created_at = Some(t.to_owned());
        }
        if let Some(m) = self.get("inputs.embedding_model") {
            cfg.embedding_model = Some(m.to_owned());
        }
        Ok(())
    }

    fn at(&self, key: &str, e: Error) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: self.values.get(key).map_or(0, |(l, _)| *l),
            message: e.to_string(),
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// Parses a comma-separated list of n-gram orders, e.g. `1,2,3`.
pub fn parse_orders(s: &str) -> Result<Vec<usize>> {
    let orders = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<usize>()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| Error::arg(format!("bad n-gram order {p:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if orders.is_empty() {
        return Err(Error::arg("no n-gram orders given"));
    }
    Ok(orders)
}
