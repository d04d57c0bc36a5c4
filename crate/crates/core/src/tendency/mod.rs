//! Central tendency, dispersion and distribution-shape measurements.

mod lm;
mod zipf;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::{Error, Result};

pub use lm::{perplexity, perplexity_from_logprobs, read_logprobs, LogprobEntry, NgramLm, Perplexity, RecordPerplexity, OOV};
pub use zipf::{zipf_fit, ZipfFit, ZipfMethod, ZIPF_MIN_CONFIDENT_ITEMS};

/// Descriptive statistics of a sample.
///
/// Dispersion and shape fields are `None` where the sample is too small (or
/// has zero variance) for them to be defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    /// All most-frequent values, ascending.
    pub modes: Vec<f64>,
    /// Unbiased (n − 1) sample variance.
    pub variance: Option<f64>,
    pub std: Option<f64>,
    pub min: f64,
    pub max: f64,
    /// Adjusted Fisher–Pearson standardized moment coefficient G1.
    pub skewness: Option<f64>,
    /// Sample excess kurtosis G2.
    pub excess_kurtosis: Option<f64>,
}

pub fn summarize(values: &[f64]) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::arg("cannot summarize an empty sample"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("sample contains non-finite values"));
    }
    let n = values.len();
    let nf = n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / nf;
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };

    let mut modes = Vec::new();
    let mut best = 0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && sorted[j] == sorted[i] {
            j += 1;
        }
        let run = j - i;
        if run > best {
            best = run;
            modes.clear();
        }
        if run == best {
            modes.push(sorted[i]);
        }
        i = j;
    }

    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in &sorted {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;

    let variance = (n >= 2).then(|| m2 * nf / (nf - 1.0));
    let has_spread = m2 > 0.0;
    let skewness = (n >= 3 && has_spread).then(|| {
        let g1 = m3 / m2.powf(1.5);
        g1 * (nf * (nf - 1.0)).sqrt() / (nf - 2.0)
    });
    let excess_kurtosis = (n >= 4 && has_spread).then(|| {
        let g2 = m4 / (m2 * m2) - 3.0;
        ((nf + 1.0) * g2 + 6.0) * (nf - 1.0) / ((nf - 2.0) * (nf - 3.0))
    });
    Ok(SummaryStats {
        count: n,
        mean,
        median,
        modes,
        variance,
        std: variance.map(f64::sqrt),
        min: sorted[0],
        max: sorted[n - 1],
        skewness,
        excess_kurtosis,
    })
}

/// Burstiness `B = (σ − μ) / (σ + μ)` of inter-event gaps.
///
/// −1 for a periodic signal, about 0 for a Poisson process, approaching 1 for
/// extremely bursty sequences. σ is the population standard deviation.
pub fn burstiness(gaps: &[f64]) -> Result<f64> {
    if gaps.len() < 2 {
        return Err(Error::arg("burstiness needs at least two gaps"));
    }
    if gaps.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(Error::arg("gaps must be finite and non-negative"));
    }
    let n = gaps.len() as f64;
    let mu = gaps.iter().sum::<f64>() / n;
    let sigma = (gaps.iter().map(|g| (g - mu).powi(2)).sum::<f64>() / n).sqrt();
    if mu + sigma == 0.0 {
        return Err(Error::undefined("burstiness of all-zero gaps"));
    }
    Ok((sigma - mu) / (sigma + mu))
}

/// Where burstiness gaps come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "source", content = "token")]
pub enum GapSource {
    Timestamps,
    TokenRecurrence(String),
}

/// Inter-event intervals of the record timestamps, sorted ascending.
/// Records without a timestamp are ignored.
pub fn timestamp_gaps(corpus: &Corpus) -> Vec<f64> {
    let mut ts: Vec<i64> = corpus.records().iter().filter_map(|r| r.timestamp).collect();
    ts.sort_unstable();
    ts.windows(2).map(|w| (w[1] - w[0]) as f64).collect()
}

/// Distances between successive occurrences of `token` in the corpus token
/// stream (records concatenated in order).
pub fn token_recurrence_gaps(corpus: &Corpus, token: &str) -> Vec<f64> {
    let positions: Vec<usize> = corpus
        .tokens()
        .iter()
        .flatten()
        .enumerate()
        .filter(|(_, t)| t.as_str() == token)
        .map(|(i, _)| i)
        .collect();
    positions.windows(2).map(|w| (w[1] - w[0]) as f64).collect()
}
