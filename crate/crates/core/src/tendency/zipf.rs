use serde::{Deserialize, Serialize};

use crate::corpus::FrequencyTable;
use crate::{Error, Result};

/// Below this many distinct items a fit is reported as low-confidence.
pub const ZIPF_MIN_CONFIDENT_ITEMS: usize = 10;

const ALPHA_MIN: f64 = 1e-6;
const ALPHA_MAX: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZipfMethod {
    /// Maximum likelihood for a power law over ranks `1..=N`.
    #[default]
    DiscreteMle,
    /// Least squares of `ln count` on `ln rank`.
    LoglogRegression,
}

impl ZipfMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ZipfMethod::DiscreteMle => "discrete-mle",
            ZipfMethod::LoglogRegression => "loglog-regression",
        }
    }
}

impl std::str::FromStr for ZipfMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discrete-mle" => Ok(ZipfMethod::DiscreteMle),
            "loglog-regression" => Ok(ZipfMethod::LoglogRegression),
            _ => Err(Error::arg(format!("unknown zipf fit method {s:?}"))),
        }
    }
}

/// Fitted rank-frequency power law `frequency ∝ rank^(−alpha)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZipfFit {
    pub alpha: f64,
    /// Largest gap between the observed and fitted rank CDFs.
    pub ks_distance: f64,
    pub n_ranks: usize,
    pub fit_method: ZipfMethod,
    /// Fewer than [`ZIPF_MIN_CONFIDENT_ITEMS`] distinct items.
    pub low_confidence: bool,
    /// The estimate hit the edge of the search interval (e.g. uniform counts).
    pub alpha_at_boundary: bool,
}

/// Fits a Zipf law to the descending rank-frequency profile of `ft`.
pub fn zipf_fit<T: Ord>(ft: &FrequencyTable<T>, method: ZipfMethod) -> Result<ZipfFit> {
    let counts = ft.ranked_counts();
    if counts.len() < 2 {
        return Err(Error::undefined(format!(
            "zipf fit needs at least two distinct items, got {}",
            counts.len()
        )));
    }
    let (alpha, boundary) = match method {
        ZipfMethod::DiscreteMle => mle_alpha(&counts),
        ZipfMethod::LoglogRegression => regression_alpha(&counts),
    };
    Ok(ZipfFit {
        alpha,
        ks_distance: ks_distance(&counts, alpha),
        n_ranks: counts.len(),
        fit_method: method,
        low_confidence: counts.len() < ZIPF_MIN_CONFIDENT_ITEMS,
        alpha_at_boundary: boundary,
    })
}

/// Expected `ln r` under `p(r) ∝ r^(−α)`, `r = 1..=n`. Decreasing in α.
fn model_mean_log_rank(log_ranks: &[f64], alpha: f64) -> f64 {
    let (mut z, mut s) = (0.0, 0.0);
    for &lr in log_ranks {
        let w = (-alpha * lr).exp();
        z += w;
        s += w * lr;
    }
    s / z
}

fn mle_alpha(counts: &[u64]) -> (f64, bool) {
    let log_ranks: Vec<f64> = (1..=counts.len()).map(|r| (r as f64).ln()).collect();
    let total: f64 = counts.iter().map(|&c| c as f64).sum();
    // the likelihood equation: model E[ln r] equals the observed mean ln r
    let observed = counts
        .iter()
        .zip(&log_ranks)
        .map(|(&c, lr)| c as f64 * lr)
        .sum::<f64>()
        / total;
    if observed >= model_mean_log_rank(&log_ranks, ALPHA_MIN) {
        return (ALPHA_MIN, true);
    }
    if observed <= model_mean_log_rank(&log_ranks, ALPHA_MAX) {
        return (ALPHA_MAX, true);
    }
    let (mut lo, mut hi) = (ALPHA_MIN, ALPHA_MAX);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model_mean_log_rank(&log_ranks, mid) > observed {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    (0.5 * (lo + hi), false)
}

fn regression_alpha(counts: &[u64]) -> (f64, bool) {
    let n = counts.len() as f64;
    let xs: Vec<f64> = (1..=counts.len()).map(|r| (r as f64).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let alpha = -sxy / sxx;
    if alpha <= ALPHA_MIN {
        (ALPHA_MIN, true)
    } else if alpha >= ALPHA_MAX {
        (ALPHA_MAX, true)
    } else {
        (alpha, false)
    }
}

fn ks_distance(counts: &[u64], alpha: f64) -> f64 {
    let total: f64 = counts.iter().map(|&c| c as f64).sum();
    let weights: Vec<f64> = (1..=counts.len()).map(|r| (r as f64).powf(-alpha)).collect();
    let z: f64 = weights.iter().sum();
    let (mut obs, mut fit, mut ks) = (0.0, 0.0, 0.0f64);
    for (&c, w) in counts.iter().zip(&weights) {
        obs += c as f64 / total;
        fit += w / z;
        ks = ks.max((obs - fit).abs());
    }
    ks.min(1.0)
}
