//! Term co-occurrence, PMI/nPMI, and linear and rank correlations.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::{Error, Result};

/// What counts as one co-occurrence context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "width")]
pub enum ContextMode {
    /// Each record is one context.
    #[default]
    Document,
    /// Each run of `w` consecutive tokens inside a record is one context;
    /// a record shorter than `w` forms a single context.
    Window(usize),
}

impl std::fmt::Display for ContextMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ContextMode::Document => write!(f, "document"),
            ContextMode::Window(w) => write!(f, "window({w})"),
        }
    }
}

impl std::str::FromStr for ContextMode {
    type Err = Error;

    /// `document`, or `window(w)` / `window:w` with `w ≥ 1`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "document" {
            return Ok(ContextMode::Document);
        }
        let width = s
            .strip_prefix("window(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| s.strip_prefix("window:"))
            .and_then(|w| w.trim().parse::<usize>().ok())
            .filter(|&w| w >= 1);
        width
            .map(ContextMode::Window)
            .ok_or_else(|| Error::arg(format!("unknown context mode {s:?} (expected document or window(w))")))
    }
}

/// How occurrences inside one context are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// Presence counted once per context; the normalizer is the context count.
    #[default]
    Binary,
    /// Term counts are occurrences, pair counts `Σ min(count x, count y)` per
    /// context; the normalizer is the number of token occurrences.
    Frequency,
}

impl Weighting {
    pub fn as_str(&self) -> &'static str {
        match self {
            Weighting::Binary => "binary",
            Weighting::Frequency => "frequency",
        }
    }
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Weighting::Binary),
            "frequency" => Ok(Weighting::Frequency),
            _ => Err(Error::arg(format!("unknown weighting {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceTable {
    /// Keys are ordered pairs `(a, b)` with `a < b`.
    pair_counts: HashMap<(String, String), u64>,
    term_counts: BTreeMap<String, u64>,
    n_contexts: u64,
    normalizer: u64,
    context_mode: ContextMode,
    weighting: Weighting,
}

fn key(x: &str, y: &str) -> (String, String) {
    if x <= y {
        (x.to_owned(), y.to_owned())
    } else {
        (y.to_owned(), x.to_owned())
    }
}

#[derive(Default)]
struct Partial {
    pairs: HashMap<(String, String), u64>,
    terms: HashMap<String, u64>,
    contexts: u64,
    tokens: u64,
}

impl Partial {
    fn merge(mut self, other: Partial) -> Partial {
        for (k, v) in other.pairs {
            *self.pairs.entry(k).or_insert(0) += v;
        }
        for (k, v) in other.terms {
            *self.terms.entry(k).or_insert(0) += v;
        }
        self.contexts += other.contexts;
        self.tokens += other.tokens;
        self
    }

    fn add_context(&mut self, ctx: &[String], targets: Option<&BTreeSet<String>>, weighting: Weighting) {
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for t in ctx {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
        self.contexts += 1;
        self.tokens += ctx.len() as u64;
        let weight = |c: u64| match weighting {
            Weighting::Binary => 1,
            Weighting::Frequency => c,
        };
        for (&t, &c) in &counts {
            *self.terms.entry(t.to_owned()).or_insert(0) += weight(c);
        }
        let terms: Vec<(&str, u64)> = counts.into_iter().collect();
        for (i, &(x, cx)) in terms.iter().enumerate() {
            for &(y, cy) in &terms[i + 1..] {
                if let Some(ts) = targets {
                    if !ts.contains(x) && !ts.contains(y) {
                        continue;
                    }
                }
                *self.pairs.entry(key(x, y)).or_insert(0) += weight(cx.min(cy));
            }
        }
    }
}

/// Counts contexts containing each term and each pair of distinct terms.
///
/// With `targets`, only pairs with at least one target term are kept.
pub fn build_cooccurrence(
    corpus: &Corpus,
    targets: Option<&BTreeSet<String>>,
    mode: ContextMode,
    weighting: Weighting,
) -> Result<CooccurrenceTable> {
    if corpus.is_empty() {
        return Err(Error::arg("co-occurrence needs a non-empty corpus"));
    }
    if targets.is_some_and(BTreeSet::is_empty) {
        return Err(Error::arg("target term set is empty"));
    }
    if mode == ContextMode::Window(0) {
        return Err(Error::arg("window width must be at least 1"));
    }
    let partial = corpus
        .tokens()
        .par_iter()
        .fold(Partial::default, |mut acc, toks| {
            match mode {
                ContextMode::Document => acc.add_context(toks, targets, weighting),
                ContextMode::Window(w) if toks.len() <= w => {
                    if !toks.is_empty() {
                        acc.add_context(toks, targets, weighting)
                    }
                }
                ContextMode::Window(w) => {
                    for win in toks.windows(w) {
                        acc.add_context(win, targets, weighting);
                    }
                }
            }
            acc
        })
        .reduce(Partial::default, Partial::merge);
    let normalizer = match weighting {
        Weighting::Binary => partial.contexts,
        Weighting::Frequency => partial.tokens,
    };
    Ok(CooccurrenceTable {
        pair_counts: partial.pairs,
        term_counts: partial.terms.into_iter().collect(),
        n_contexts: partial.contexts,
        normalizer,
        context_mode: mode,
        weighting,
    })
}

impl CooccurrenceTable {
    /// Builds a table directly from counts (binary weighting).
    pub fn from_counts(
        term_counts: impl IntoIterator<Item = (String, u64)>,
        pair_counts: impl IntoIterator<Item = ((String, String), u64)>,
        n_contexts: u64,
    ) -> Result<Self> {
        let term_counts: BTreeMap<String, u64> = term_counts.into_iter().collect();
        if let Some((t, c)) = term_counts.iter().find(|(_, &c)| c > n_contexts) {
            return Err(Error::arg(format!("term {t:?} count {c} exceeds {n_contexts} contexts")));
        }
        let mut pairs = HashMap::new();
        for ((x, y), c) in pair_counts {
            if x == y {
                return Err(Error::arg(format!("self pair ({x:?}, {x:?})")));
            }
            let cap = term_counts.get(&x).copied().unwrap_or(0).min(term_counts.get(&y).copied().unwrap_or(0));
            if c > cap {
                return Err(Error::arg(format!("pair ({x:?}, {y:?}) count {c} exceeds its term counts")));
            }
            if c > 0 {
                pairs.insert(key(&x, &y), c);
            }
        }
        Ok(CooccurrenceTable {
            pair_counts: pairs,
            term_counts,
            n_contexts,
            normalizer: n_contexts,
            context_mode: ContextMode::Document,
            weighting: Weighting::Binary,
        })
    }

    pub fn pair_count(&self, x: &str, y: &str) -> u64 {
        if x == y {
            return 0;
        }
        self.pair_counts.get(&key(x, y)).copied().unwrap_or(0)
    }

    pub fn term_count(&self, x: &str) -> u64 {
        self.term_counts.get(x).copied().unwrap_or(0)
    }

    pub fn n_contexts(&self) -> u64 {
        self.n_contexts
    }

    pub fn context_mode(&self) -> ContextMode {
        self.context_mode
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    pub fn terms(&self) -> impl Iterator<Item = &String> {
        self.term_counts.keys()
    }

    /// Terms co-occurring at least once with `x`, sorted.
    pub fn co_terms(&self, x: &str) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .pair_counts
            .keys()
            .filter_map(|(a, b)| {
                if a == x {
                    Some(b.as_str())
                } else if b == x {
                    Some(a.as_str())
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Smoothed probability `(count + α) / (normalizer + α)`: α pseudo-contexts
    /// containing every term.
    fn prob(&self, count: u64, alpha: f64) -> f64 {
        (count as f64 + alpha) / (self.normalizer as f64 + alpha)
    }

    fn probs(&self, x: &str, y: &str, alpha: f64) -> Result<(f64, f64, f64)> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::arg("smoothing must be finite and non-negative"));
        }
        for t in [x, y] {
            if self.term_count(t) == 0 {
                return Err(Error::arg(format!("term {t:?} does not occur in the table")));
            }
        }
        if x == y {
            return Err(Error::arg("pmi of a term with itself is not defined"));
        }
        Ok((
            self.prob(self.pair_count(x, y), alpha),
            self.prob(self.term_count(x), alpha),
            self.prob(self.term_count(y), alpha),
        ))
    }
}

/// `ln(p(x,y) / (p(x)·p(y)))`; `-inf` when the pair never co-occurs and α = 0.
pub fn pmi(table: &CooccurrenceTable, x: &str, y: &str, alpha: f64) -> Result<f64> {
    let (pxy, px, py) = table.probs(x, y, alpha)?;
    if pxy == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(pxy.ln() - px.ln() - py.ln())
}

/// PMI scaled into `[-1, 1]` by `−ln p(x,y)`.
///
/// Never co-occurring pairs give −1; when `p(x,y) = 1` the limit value 1 is returned.
pub fn npmi(table: &CooccurrenceTable, x: &str, y: &str, alpha: f64) -> Result<f64> {
    let (pxy, px, py) = table.probs(x, y, alpha)?;
    if pxy == 0.0 {
        return Ok(-1.0);
    }
    if pxy >= 1.0 {
        return Ok(1.0);
    }
    let v = (pxy.ln() - px.ln() - py.ln()) / -pxy.ln();
    Ok(v.clamp(-1.0, 1.0))
}

/// Whether `npmi(x, y)` hits one of its edge conventions.
pub fn npmi_flag(table: &CooccurrenceTable, x: &str, y: &str, alpha: f64) -> Option<&'static str> {
    let (pxy, _, _) = table.probs(x, y, alpha).ok()?;
    if pxy == 0.0 {
        Some("never-co-occur")
    } else if pxy >= 1.0 {
        Some("joint-probability-one")
    } else {
        None
    }
}

fn check_pair_input(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::arg(format!("length mismatch: {} vs {}", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::arg("correlation needs at least two pairs"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::arg("correlation inputs must be finite"));
    }
    Ok(())
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair_input(xs, ys)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::undefined("correlation with a zero-variance input"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Fractional ranks starting at 1; ties share their mean rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson over average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair_input(xs, ys)?;
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// One target's strongest associations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationRow {
    pub target: String,
    /// `(co-term, npmi, pair count)` sorted by descending nPMI, then co-term.
    pub co_terms: Vec<(String, f64, u64)>,
    /// Set when the target does not occur in the corpus.
    pub warning: Option<String>,
}

/// Top `k` co-terms by nPMI for each target, over co-occurring pairs.
pub fn top_associations(table: &CooccurrenceTable, targets: &[String], k: usize, alpha: f64) -> Result<Vec<AssociationRow>> {
    targets
        .iter()
        .map(|t| {
            if table.term_count(t) == 0 {
                return Ok(AssociationRow {
                    target: t.clone(),
                    co_terms: Vec::new(),
                    warning: Some(format!("target {t:?} does not occur in the corpus")),
                });
            }
            let mut scored = table
                .co_terms(t)
                .into_iter()
                .map(|y| Ok((y.to_owned(), npmi(table, t, y, alpha)?, table.pair_count(t, y))))
                .collect::<Result<Vec<_>>>()?;
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            scored.truncate(k);
            Ok(AssociationRow {
                target: t.clone(),
                co_terms: scored,
                warning: None,
            })
        })
        .collect()
}

/// Reads a target-term list: one term per line, `#` starts a comment.
pub fn parse_target_terms(text: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .filter(|l| seen.insert(l.to_string()))
        .map(str::to_owned)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TokenizerConfig;

    fn corpus(texts: &[&str]) -> Corpus {
        Corpus::from_texts(texts, TokenizerConfig::default())
    }

    #[test]
    fn document_mode_counts() {
        let t = build_cooccurrence(&corpus(&["a b", "a c"]), None, ContextMode::Document, Weighting::Binary).unwrap();
        assert_eq!(t.pair_count("a", "b"), 1);
        assert_eq!(t.pair_count("c", "a"), 1);
        assert_eq!(t.pair_count("b", "c"), 0);
        assert_eq!(t.n_contexts(), 2);
        assert_eq!(t.term_count("a"), 2);
    }

    #[test]
    fn presence_not_frequency() {
        let t = build_cooccurrence(&corpus(&["a b a"]), None, ContextMode::Document, Weighting::Binary).unwrap();
        assert_eq!(t.pair_count("a", "b"), 1);
        assert_eq!(t.pair_count("a", "a"), 0);
        let f = build_cooccurrence(&corpus(&["a b a b b"]), None, ContextMode::Document, Weighting::Frequency).unwrap();
        assert_eq!(f.pair_count("a", "b"), 2);
        assert_eq!(f.term_count("b"), 3);
    }

    #[test]
    fn windows() {
        let t = build_cooccurrence(&corpus(&["a b c d", "a", ""]), None, ContextMode::Window(2), Weighting::Binary).unwrap();
        // windows: ab, bc, cd, a
        assert_eq!(t.n_contexts(), 4);
        assert_eq!(t.pair_count("a", "b"), 1);
        assert_eq!(t.pair_count("a", "c"), 0);
        assert_eq!(t.term_count("a"), 2);
    }

    #[test]
    fn target_restriction() {
        let targets: BTreeSet<String> = ["a".to_string()].into();
        let t = build_cooccurrence(&corpus(&["a b c"]), Some(&targets), ContextMode::Document, Weighting::Binary).unwrap();
        assert_eq!(t.pair_count("a", "b"), 1);
        assert_eq!(t.pair_count("b", "c"), 0);
        assert!(build_cooccurrence(&corpus(&["a"]), Some(&BTreeSet::new()), ContextMode::Document, Weighting::Binary).is_err());
        assert!(build_cooccurrence(&corpus(&["a"]), None, ContextMode::Window(0), Weighting::Binary).is_err());
    }

    #[test]
    fn perfect_and_independent() {
        // x and y appear together in 2 of 4 contexts and never apart
        let t = build_cooccurrence(&corpus(&["x y", "x y", "z", "w"]), None, ContextMode::Document, Weighting::Binary).unwrap();
        assert!((pmi(&t, "x", "y", 0.0).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!((npmi(&t, "x", "y", 0.0).unwrap() - 1.0).abs() < 1e-12);
        // p(a) = p(b) = 1/2, p(a,b) = 1/4
        let t = build_cooccurrence(&corpus(&["a b", "a", "b", "c"]), None, ContextMode::Document, Weighting::Binary).unwrap();
        assert!(pmi(&t, "a", "b", 0.0).unwrap().abs() < 1e-12);
        assert!(npmi(&t, "a", "b", 0.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn edge_conventions() {
        let t = build_cooccurrence(&corpus(&["a", "b"]), None, ContextMode::Document, Weighting::Binary).unwrap();
        assert_eq!(pmi(&t, "a", "b", 0.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(npmi(&t, "a", "b", 0.0).unwrap(), -1.0);
        assert_eq!(npmi_flag(&t, "a", "b", 0.0), Some("never-co-occur"));
        assert!(pmi(&t, "a", "b", 1.0).unwrap().is_finite());
        let all = build_cooccurrence(&corpus(&["a b", "b a"]), None, ContextMode::Document, Weighting::Binary).unwrap();
        assert_eq!(npmi(&all, "a", "b", 0.0).unwrap(), 1.0);
        assert_eq!(npmi_flag(&all, "a", "b", 0.0), Some("joint-probability-one"));
        assert!(pmi(&t, "a", "zzz", 0.0).is_err());
        assert!(pmi(&t, "a", "a", 0.0).is_err());
    }

    #[test]
    fn correlation_examples() {
        let xs = [1.0, 2.0, 3.5, 7.0];
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &xs).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert!(pearson(&xs, &[1.0; 4]).is_err());
        assert!(pearson(&[1.0], &[1.0]).is_err());
        let ys = [0.1, 5.0, 6.0, 100.0];
        assert!((spearman(&xs, &ys).unwrap() - 1.0).abs() < 1e-15);
        let rev = [4.0, 3.0, 2.0, 1.0];
        assert!((spearman(&xs, &rev).unwrap() + 1.0).abs() < 1e-15);
        assert!(spearman(&[2.0; 3], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), [2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn top_associations_and_missing_targets() {
        let t = build_cooccurrence(&corpus(&["x y z", "x y", "z w", "x w"]), None, ContextMode::Document, Weighting::Binary).unwrap();
        let rows = top_associations(&t, &["x".into(), "nope".into()], 2, 0.0).unwrap();
        assert_eq!(rows[0].co_terms[0].0, "y");
        assert_eq!(rows[0].co_terms.len(), 2);
        assert!(rows[1].co_terms.is_empty() && rows[1].warning.is_some());
    }

    #[test]
    fn target_file_parsing() {
        assert_eq!(parse_target_terms("# ids\nwoman\n man # comment\n\nwoman\n"), ["woman", "man"]);
    }
}
