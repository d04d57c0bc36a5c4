//! Distances and divergences between strings, distributions and documents.

pub mod transport;

use std::collections::{BTreeMap, HashMap};

use crate::corpus::FrequencyTable;
use crate::vectors::{cosine_similarity, euclidean_unchecked, EmbeddingMatrix};
use crate::{Error, Result};

pub use transport::{TransportPlan, DEFAULT_SUPPORT_CAP};

/// Minimum number of single-character insertions, deletions and
/// substitutions turning `a` into `b`. Operates on Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (short, long) = if a.len() <= b.len() { (&a, &b) } else { (&b, &a) };
    if short.is_empty() {
        return long.len();
    }
    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut cur = vec![0; short.len() + 1];
    for (i, lc) in long.iter().enumerate() {
        cur[0] = i + 1;
        for (j, sc) in short.iter().enumerate() {
            let sub = prev[j] + usize::from(lc != sc);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

/// A discrete probability distribution over labelled items.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    support: Vec<String>,
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates non-negativity, unique support and unit total (within 1e-9).
    pub fn new(support: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(Error::arg("support and probabilities differ in length"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::arg("probabilities must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::arg(format!("probabilities sum to {total}, not 1")));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = support.iter().find(|s| !seen.insert(s.as_str())) {
            return Err(Error::arg(format!("duplicate support item {dup:?}")));
        }
        Ok(Distribution { support, probs })
    }

    /// Relative frequencies of a non-empty table.
    pub fn from_counts<T: Ord + ToString>(ft: &FrequencyTable<T>) -> Result<Self> {
        if ft.total() == 0 {
            return Err(Error::arg("cannot normalize an empty frequency table"));
        }
        let total = ft.total() as f64;
        let (support, probs) = ft
            .iter()
            .map(|(k, c)| (k.to_string(), c as f64 / total))
            .unzip();
        Distribution::new(support, probs)
    }

    pub fn support(&self) -> &[String] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    fn mass_map(&self) -> HashMap<&str, f64> {
        self.support
            .iter()
            .map(String::as_str)
            .zip(self.probs.iter().copied())
            .collect()
    }
}

/// Default additive smoothing applied to `q` in [`kl_divergence`].
pub const DEFAULT_KL_SMOOTHING: f64 = 1e-9;

/// `KL(p‖q)` in nats over the union of both supports.
///
/// `epsilon` is added to every `q` mass on the union support before `q` is
/// renormalized. With `epsilon = 0` and `q` missing mass where `p` has some,
/// the divergence is `f64::INFINITY`.
pub fn kl_divergence(p: &Distribution, q: &Distribution, epsilon: f64) -> Result<f64> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::arg("smoothing epsilon must be finite and non-negative"));
    }
    let qm = q.mass_map();
    let pm = p.mass_map();
    let union_len = p.len() + q.support.iter().filter(|s| !pm.contains_key(s.as_str())).count();
    let q_norm = 1.0 + epsilon * union_len as f64;
    let mut kl = 0.0;
    for (item, &pi) in p.support.iter().zip(&p.probs) {
        if pi == 0.0 {
            continue;
        }
        let qi = (qm.get(item.as_str()).copied().unwrap_or(0.0) + epsilon) / q_norm;
        if qi == 0.0 {
            return Ok(f64::INFINITY);
        }
        kl += pi * (pi / qi).ln();
    }
    // rounding can push identical distributions a hair below zero
    Ok(kl.max(0.0))
}

/// 1-D earth mover's distance between equal-size samples:
/// mean `|sorted(xs)ᵢ − sorted(ys)ᵢ|`.
pub fn emd_1d(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::arg("emd_1d needs non-empty samples"));
    }
    if xs.len() != ys.len() {
        return Err(Error::arg(
            "emd_1d needs equal-size samples; use emd_discrete for unequal sizes",
        ));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::arg("samples must be finite"));
    }
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

/// Exact earth mover's distance between two distributions under `cost`.
pub fn emd_discrete<F>(p: &Distribution, q: &Distribution, cost: F) -> Result<f64>
where
    F: Fn(&str, &str) -> f64,
{
    emd_discrete_with_cap(p, q, cost, DEFAULT_SUPPORT_CAP)
}

pub fn emd_discrete_with_cap<F>(p: &Distribution, q: &Distribution, cost: F, cap: usize) -> Result<f64>
where
    F: Fn(&str, &str) -> f64,
{
    let c: Vec<f64> = p
        .support
        .iter()
        .flat_map(|a| q.support.iter().map(|b| cost(a, b)))
        .collect();
    Ok(transport::solve(&p.probs, &q.probs, &c, cap)?.cost)
}

/// Ground cost between word embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroundCost {
    #[default]
    Euclidean,
    /// `1 − cosine similarity`.
    Cosine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WmdResult {
    pub distance: f64,
    /// Tokens (with multiplicity) dropped from each document for lacking an embedding.
    pub dropped_a: usize,
    pub dropped_b: usize,
}

/// Word mover's distance between two token lists using normalized
/// term-frequency bags.
pub fn word_movers_distance(
    doc_a: &[String],
    doc_b: &[String],
    emb: &EmbeddingMatrix,
    ground: GroundCost,
) -> Result<WmdResult> {
    let bag = |doc: &[String]| {
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        let mut dropped = 0;
        for t in doc {
            match emb.position(t) {
                Some(i) => *counts.entry(i).or_insert(0) += 1,
                None => dropped += 1,
            }
        }
        (counts, dropped)
    };
    let (bag_a, dropped_a) = bag(doc_a);
    let (bag_b, dropped_b) = bag(doc_b);
    if bag_a.is_empty() || bag_b.is_empty() {
        return Err(Error::undefined(
            "document has no embedded tokens left for word mover's distance",
        ));
    }
    let masses = |bag: &BTreeMap<usize, u64>| {
        let total: u64 = bag.values().sum();
        bag.values().map(|&c| c as f64 / total as f64).collect::<Vec<_>>()
    };
    let mut cost = Vec::with_capacity(bag_a.len() * bag_b.len());
    for &i in bag_a.keys() {
        for &j in bag_b.keys() {
            let c = match ground {
                GroundCost::Euclidean => euclidean_unchecked(emb.row(i), emb.row(j)),
                GroundCost::Cosine => 1.0 - cosine_similarity(emb.row(i), emb.row(j))?,
            };
            cost.push(c);
        }
    }
    let plan = transport::solve(&masses(&bag_a), &masses(&bag_b), &cost, DEFAULT_SUPPORT_CAP)?;
    Ok(WmdResult {
        distance: plan.cost,
        dropped_a,
        dropped_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(probs: &[f64]) -> Distribution {
        let support = (0..probs.len()).map(|i| format!("x{i}")).collect();
        Distribution::new(support, probs.to_vec()).unwrap()
    }

    /// Plain exponential recursion; only usable on short strings.
    fn lev_recursive(a: &[char], b: &[char]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((ca, ra)), Some((cb, rb))) => {
                if ca == cb {
                    lev_recursive(ra, rb)
                } else {
                    1 + lev_recursive(ra, b)
                        .min(lev_recursive(a, rb))
                        .min(lev_recursive(ra, rb))
                }
            }
        }
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein("abc", "abc"), 0);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("abc", ""), 3);
        let k: Vec<char> = "kitten".chars().collect();
        let s: Vec<char> = "sitting".chars().collect();
        assert_eq!(lev_recursive(&k, &s), 3);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("héllo", "hello"), 1);
    }

    proptest! {
        #[test]
        fn levenshtein_matches_recursion(a in "[abc]{0,6}", b in "[abc]{0,6}") {
            let ac: Vec<char> = a.chars().collect();
            let bc: Vec<char> = b.chars().collect();
            prop_assert_eq!(levenshtein(&a, &b), lev_recursive(&ac, &bc));
        }

        #[test]
        fn levenshtein_bounds(a in "[a-dé]{0,12}", b in "[a-dé]{0,12}") {
            let (la, lb) = (a.chars().count(), b.chars().count());
            let d = levenshtein(&a, &b);
            prop_assert!(d >= la.abs_diff(lb));
            prop_assert!(d <= la.max(lb));
            prop_assert_eq!(d == 0, a == b);
        }
    }

    #[test]
    fn kl_examples() {
        let p = dist(&[0.5, 0.5]);
        assert_eq!(kl_divergence(&p, &p, 0.0).unwrap(), 0.0);
        let q = dist(&[0.25, 0.75]);
        // 0.5 ln 2 + 0.5 ln(2/3)
        let oracle = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        let kl = kl_divergence(&p, &q, 0.0).unwrap();
        assert!((kl - oracle).abs() < 1e-15);
        assert!((kl - 0.1438).abs() < 1e-4);
        let a = dist(&[1.0, 0.0]);
        let b = dist(&[0.0, 1.0]);
        assert_eq!(kl_divergence(&a, &b, 0.0).unwrap(), f64::INFINITY);
        assert!(kl_divergence(&a, &b, DEFAULT_KL_SMOOTHING).unwrap().is_finite());
    }

    #[test]
    fn kl_aligns_disjoint_supports() {
        let p = Distribution::new(vec!["a".into(), "b".into()], vec![0.5, 0.5]).unwrap();
        let q = Distribution::new(vec!["b".into(), "c".into()], vec![0.5, 0.5]).unwrap();
        assert_eq!(kl_divergence(&p, &q, 0.0).unwrap(), f64::INFINITY);
        // with smoothing q' = (q + ε) / (1 + 3ε) on {a, b, c}
        let eps: f64 = 0.1;
        let qa = eps / 1.3;
        let qb: f64 = 0.6 / 1.3;
        let oracle = 0.5 * (0.5 / qa).ln() + 0.5 * (0.5 / qb).ln();
        assert!((kl_divergence(&p, &q, eps).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(vec!["a".into()], vec![0.5]).is_err());
        assert!(Distribution::new(vec!["a".into(), "a".into()], vec![0.5, 0.5]).is_err());
        assert!(Distribution::new(vec!["a".into()], vec![-1.0]).is_err());
        let ft: FrequencyTable<String> = ["a", "b", "b"].iter().map(|s| s.to_string()).collect();
        let d = Distribution::from_counts(&ft).unwrap();
        assert_eq!(d.probs(), [1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn emd_1d_examples() {
        assert_eq!(emd_1d(&[3.0, 1.0], &[1.0, 3.0]).unwrap(), 0.0);
        // matchings {0→1, 1→2} = 2/2 and {0→2, 1→1} = 2/2; both average 1
        assert_eq!(emd_1d(&[0.0, 1.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert!(emd_1d(&[], &[]).is_err());
        assert!(emd_1d(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn emd_discrete_examples() {
        let p = dist(&[0.2, 0.3, 0.5]);
        let pos = |s: &str| s[1..].parse::<f64>().unwrap();
        let metric = |a: &str, b: &str| (pos(a) - pos(b)).abs();
        assert!(emd_discrete(&p, &p, metric).unwrap().abs() < 1e-15);
        let a = Distribution::new(vec!["2".into()], vec![1.0]).unwrap();
        let b = Distribution::new(vec!["7.5".into()], vec![1.0]).unwrap();
        let d = emd_discrete(&a, &b, |x, y| (x.parse::<f64>().unwrap() - y.parse::<f64>().unwrap()).abs());
        assert_eq!(d.unwrap(), 5.5);
        assert!(emd_discrete(&a, &b, |_, _| -1.0).is_err());
        assert!(emd_discrete(&a, &b, |_, _| f64::INFINITY).is_err());
    }

    fn toy_embeddings() -> EmbeddingMatrix {
        EmbeddingMatrix::new(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![vec![0.0, 0.0], vec![3.0, 4.0], vec![1.0, 0.0], vec![0.0, 2.0]],
        )
        .unwrap()
    }

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn wmd_examples() {
        let emb = toy_embeddings();
        let r = word_movers_distance(&toks("a b c"), &toks("c b a"), &emb, GroundCost::Euclidean).unwrap();
        assert!(r.distance.abs() < 1e-15);
        let r = word_movers_distance(&toks("a"), &toks("b"), &emb, GroundCost::Euclidean).unwrap();
        assert_eq!(r.distance, 5.0);
        let r = word_movers_distance(&toks("a zz zz"), &toks("b"), &emb, GroundCost::Euclidean).unwrap();
        assert_eq!((r.distance, r.dropped_a, r.dropped_b), (5.0, 2, 0));
        assert!(matches!(
            word_movers_distance(&toks("zz"), &toks("a"), &emb, GroundCost::Euclidean),
            Err(Error::Undefined(_))
        ));
        let r = word_movers_distance(&toks("c"), &toks("d"), &emb, GroundCost::Cosine).unwrap();
        assert!((r.distance - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wmd_is_symmetric() {
        let emb = toy_embeddings();
        let x = toks("a a b d");
        let y = toks("c d d");
        let xy = word_movers_distance(&x, &y, &emb, GroundCost::Euclidean).unwrap();
        let yx = word_movers_distance(&y, &x, &emb, GroundCost::Euclidean).unwrap();
        assert!((xy.distance - yx.distance).abs() < 1e-12);
    }
}
