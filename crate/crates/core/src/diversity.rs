//! Diversity indices over frequency tables, labelled subsets and embedded samples.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, FrequencyTable, Record};
use crate::vectors::{dot, euclidean_unchecked, norm, EmbeddingMatrix};
use crate::{Error, Result};

fn check_nonempty<T: Ord>(ft: &FrequencyTable<T>) -> Result<()> {
    if ft.total() == 0 {
        return Err(Error::arg("frequency table is empty"));
    }
    Ok(())
}

/// `1 − Σ pᵢ²`.
pub fn gini_diversity<T: Ord>(ft: &FrequencyTable<T>) -> Result<f64> {
    check_nonempty(ft)?;
    let total = ft.total() as f64;
    Ok(1.0 - ft.counts().map(|c| (c as f64 / total).powi(2)).sum::<f64>())
}

/// Shannon entropy in nats.
pub fn shannon_entropy<T: Ord>(ft: &FrequencyTable<T>) -> Result<f64> {
    check_nonempty(ft)?;
    Ok(entropy_of_counts(ft.counts(), ft.total()))
}

pub(crate) fn entropy_of_counts(counts: impl Iterator<Item = u64>, total: u64) -> f64 {
    let total = total as f64;
    let h = -counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total;
            p * p.ln()
        })
        .sum::<f64>();
    h.max(0.0)
}

/// Symmetric similarity matrix with unit diagonal and entries in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityKernel {
    n: usize,
    matrix: Vec<f64>,
    source: String,
}

const KERNEL_TOL: f64 = 1e-9;

impl SimilarityKernel {
    /// Row-major `n × n` matrix.
    pub fn new(n: usize, matrix: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        if n == 0 || matrix.len() != n * n {
            return Err(Error::arg(format!("kernel needs {n}×{n} entries, got {}", matrix.len())));
        }
        for i in 0..n {
            if (matrix[i * n + i] - 1.0).abs() > KERNEL_TOL {
                return Err(Error::arg(format!("kernel diagonal entry {i} is not 1")));
            }
            for j in 0..n {
                let v = matrix[i * n + j];
                if !v.is_finite() || !(-1.0 - KERNEL_TOL..=1.0 + KERNEL_TOL).contains(&v) {
                    return Err(Error::arg(format!("kernel entry ({i}, {j}) = {v} outside [-1, 1]")));
                }
                if (v - matrix[j * n + i]).abs() > KERNEL_TOL {
                    return Err(Error::arg(format!("kernel is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(SimilarityKernel {
            n,
            matrix,
            source: source.into(),
        })
    }

    /// Cosine-similarity kernel over the rows of `emb`.
    pub fn cosine(emb: &EmbeddingMatrix) -> Result<Self> {
        let n = emb.n_rows();
        let norms: Vec<f64> = emb.rows().map(norm).collect();
        if let Some(i) = norms.iter().position(|&x| x == 0.0) {
            return Err(Error::undefined(format!(
                "row {:?} has zero norm; cosine kernel undefined",
                emb.labels()[i]
            )));
        }
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = 1.0;
            for j in i + 1..n {
                let s = (dot(emb.row(i), emb.row(j)) / (norms[i] * norms[j])).clamp(-1.0, 1.0);
                m[i * n + j] = s;
                m[j * n + i] = s;
            }
        }
        SimilarityKernel::new(n, m, "cosine similarity of embedding rows")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n + j]
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

/// Exponential of the Shannon entropy of the eigenvalues of `K / n`.
///
/// Ranges over `[1, n]`: 1 when every item is identical, `n` when all are
/// mutually orthogonal.
pub fn vendi_score(kernel: &SimilarityKernel) -> Result<f64> {
    let n = kernel.n;
    let eig = DMatrix::from_row_slice(n, n, &kernel.matrix).symmetric_eigenvalues();
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-8 * n as f64 {
        return Err(Error::InvalidKernel(format!(
            "kernel is not positive semidefinite (eigenvalue {min:.3e})"
        )));
    }
    // trace(K) = n
    let floor = 1e-10 * n as f64;
    let total: f64 = eig.iter().filter(|&&l| l > floor).sum();
    let h = -eig
        .iter()
        .filter(|&&l| l > floor)
        .map(|&l| {
            let p = l / total;
            p * p.ln()
        })
        .sum::<f64>();
    Ok(h.max(0.0).exp().clamp(1.0, n as f64))
}

/// Denominator used by [`ngram_diversity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NgramDenominator {
    /// Total n-gram occurrences (distinct-n).
    #[default]
    TotalNgrams,
    /// Number of distinct unigram types in the corpus.
    Vocabulary,
}

impl NgramDenominator {
    pub fn as_str(&self) -> &'static str {
        match self {
            NgramDenominator::TotalNgrams => "total-ngrams",
            NgramDenominator::Vocabulary => "vocabulary",
        }
    }
}

impl std::str::FromStr for NgramDenominator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "total-ngrams" => Ok(NgramDenominator::TotalNgrams),
            "vocabulary" => Ok(NgramDenominator::Vocabulary),
            _ => Err(Error::arg(format!("unknown n-gram denominator {s:?}"))),
        }
    }
}

/// Distinct n-grams divided by the chosen denominator.
pub fn ngram_diversity(corpus: &Corpus, n: usize, denominator: NgramDenominator) -> Result<f64> {
    let grams = corpus.ngrams(n)?;
    if grams.total() == 0 {
        return Err(Error::undefined(format!("corpus has no {n}-grams")));
    }
    let denom = match denominator {
        NgramDenominator::TotalNgrams => grams.total() as f64,
        NgramDenominator::Vocabulary => corpus.vocabulary_size() as f64,
    };
    Ok(grams.len() as f64 / denom)
}

/// Mean Euclidean distance of rows to their centroid.
pub fn embedding_dispersion(emb: &EmbeddingMatrix) -> Result<f64> {
    let n = emb.n_rows();
    if n < 2 {
        return Err(Error::arg("dispersion needs at least two rows"));
    }
    let mut centroid = vec![0.0; emb.dim()];
    for row in emb.rows() {
        for (c, v) in centroid.iter_mut().zip(row) {
            *c += v;
        }
    }
    centroid.iter_mut().for_each(|c| *c /= n as f64);
    Ok(emb.rows().map(|r| euclidean_unchecked(r, &centroid)).sum::<f64>() / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetDiversityReport {
    pub attribute: String,
    pub proportions: BTreeMap<String, f64>,
    /// Entropy of `proportions`, nats.
    pub entropy: f64,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
}

/// Label distribution of `attribute` over records carrying it. Unlabelled
/// records are counted, never imputed.
pub fn subset_diversity(records: &[Record], attribute: &str) -> Result<SubsetDiversityReport> {
    let labels: FrequencyTable<&str> = records
        .iter()
        .filter_map(|r| r.attributes.get(attribute).map(String::as_str))
        .collect();
    if labels.total() == 0 {
        return Err(Error::arg(format!("no record carries attribute {attribute:?}")));
    }
    let n_labeled = labels.total() as usize;
    let proportions = labels
        .iter()
        .map(|(l, c)| (l.to_string(), c as f64 / n_labeled as f64))
        .collect();
    Ok(SubsetDiversityReport {
        attribute: attribute.to_owned(),
        proportions,
        entropy: entropy_of_counts(labels.counts(), labels.total()),
        n_labeled,
        n_unlabeled: records.len() - n_labeled,
    })
}
