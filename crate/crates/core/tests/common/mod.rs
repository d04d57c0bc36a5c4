//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random probability vector with `n` entries, some possibly zero.
pub fn random_probs(rng: &mut impl Rng, n: usize, allow_zero: bool) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..n)
            .map(|_| {
                if allow_zero && rng.random_bool(0.2) {
                    0.0
                } else {
                    rng.random_range(0.01..1.0)
                }
            })
            .collect();
        let s: f64 = w.iter().sum();
        if s > 0.0 {
            return w.iter().map(|x| x / s).collect();
        }
    }
}

/// Minimum-cost transport by enumerating every basic solution.
///
/// Each choice of `m + n − 1` cells whose constraint columns are linearly
/// independent fixes a unique flow; the optimum is the cheapest non-negative
/// one. Exponential, only for supports up to about 4×4.
pub fn brute_force_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> f64 {
    let (m, n) = (supply.len(), demand.len());
    let cells = m * n;
    let basis = m + n - 1;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(basis);
    subsets(cells, basis, 0, &mut chosen, &mut |set| {
        // equations: every row sum, and all but the last column sum
        let mut a = DMatrix::<f64>::zeros(basis, basis);
        let mut b = DVector::<f64>::zeros(basis);
        for i in 0..m {
            b[i] = supply[i];
        }
        for j in 0..n - 1 {
            b[m + j] = demand[j];
        }
        for (col, &cell) in set.iter().enumerate() {
            let (i, j) = (cell / n, cell % n);
            a[(i, col)] = 1.0;
            if j < n - 1 {
                a[(m + j, col)] = 1.0;
            }
        }
        let lu = a.lu();
        if lu.determinant().abs() < 1e-9 {
            return;
        }
        let Some(x) = lu.solve(&b) else { return };
        if x.iter().any(|&v| v < -1e-12) {
            return;
        }
        let total: f64 = set.iter().zip(x.iter()).map(|(&cell, &f)| f * cost[cell]).sum();
        best = best.min(total);
    });
    best
}

fn subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if cur.len() == k {
        f(cur);
        return;
    }
    for i in start..n {
        if n - i < k - cur.len() {
            break;
        }
        cur.push(i);
        subsets(n, k, i + 1, cur, f);
        cur.pop();
    }
}

/// n-gram counts by sliding a window over each record's tokens.
pub fn sliding_ngrams(records: &[Vec<String>], n: usize) -> HashMap<Vec<String>, u64> {
    let mut out = HashMap::new();
    for toks in records {
        let mut i = 0;
        while i + n <= toks.len() {
            *out.entry(toks[i..i + n].to_vec()).or_insert(0) += 1;
            i += 1;
        }
    }
    out
}

/// Tokens of text made only of ASCII letters, digits, whitespace and simple
/// punctuation: maximal alphanumeric runs, lowercased.
pub fn char_class_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_ascii_alphanumeric() {
            cur.push(c.to_ascii_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Mean similarity to the `k` most similar other rows, by full sort.
pub fn brute_knn(rows: &[Vec<f64>], k: usize, cosine: bool) -> Vec<f64> {
    let sim = |a: &[f64], b: &[f64]| {
        if cosine {
            let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            (d / (na * nb)).clamp(-1.0, 1.0)
        } else {
            1.0 / (1.0 + a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
        }
    };
    (0..rows.len())
        .map(|i| {
            let mut s: Vec<f64> = (0..rows.len()).filter(|&j| j != i).map(|j| sim(&rows[i], &rows[j])).collect();
            s.sort_by(|a, b| b.partial_cmp(a).unwrap());
            s[..k].iter().sum::<f64>() / k as f64
        })
        .collect()
}

/// Duplicate structure by comparing every pair of normalized texts.
/// Returns (distinct, clusters of size ≥ 2, excess, sorted cluster sizes).
pub fn pairwise_duplicates(texts: &[String], fold: bool) -> (usize, usize, usize, Vec<usize>) {
    let norm = |t: &str| {
        if fold {
            t.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
        } else {
            t.trim_end().to_owned()
        }
    };
    let normed: Vec<String> = texts.iter().map(|t| norm(t)).collect();
    let n = normed.len();
    let mut rep: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in 0..i {
            if normed[i] == normed[j] {
                rep[i] = rep[j];
                break;
            }
        }
    }
    let mut sizes: HashMap<usize, usize> = HashMap::new();
    for r in &rep {
        *sizes.entry(*r).or_insert(0) += 1;
    }
    let mut sizes: Vec<usize> = sizes.into_values().collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let distinct = sizes.len();
    let clusters = sizes.iter().filter(|&&s| s >= 2).count();
    (distinct, clusters, n - distinct, sizes)
}

/// Textbook two-pass moments: (mean, sample variance, G1, G2).
pub fn naive_moments(x: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    let g1 = m3 / m2.powf(1.5);
    let big_g1 = g1 * (n * (n - 1.0)).sqrt() / (n - 2.0);
    let g2 = m4 / (m2 * m2) - 3.0;
    let big_g2 = (n - 1.0) / ((n - 2.0) * (n - 3.0)) * ((n + 1.0) * g2 + 6.0);
    (mean, var, big_g1, big_g2)
}

/// A synthetic corpus line generator over a small vocabulary.
pub fn random_text(rng: &mut impl Rng, vocab: &[&str], len: usize) -> String {
    (0..len).map(|_| vocab[rng.random_range(0..vocab.len())]).collect::<Vec<_>>().join(" ")
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tolerance {tol})");
}
