//! Compactness of embedded data, globally and per point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::vectors::{dot, euclidean_unchecked, norm, EmbeddingMatrix};
use crate::{Error, Result};

/// Largest matrix handled by the exact pairwise neighbor search.
pub const MAX_EXACT_POINTS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Similarity {
    #[default]
    Cosine,
    /// `1 / (1 + euclidean distance)`.
    InverseEuclidean,
}

impl Similarity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Similarity::Cosine => "cosine",
            Similarity::InverseEuclidean => "inverse-euclidean",
        }
    }
}

impl std::str::FromStr for Similarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Similarity::Cosine),
            "inverse-euclidean" => Ok(Similarity::InverseEuclidean),
            _ => Err(Error::arg(format!("unknown similarity {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub global_density: f64,
    /// Aligned with the matrix labels.
    pub per_point_density: Vec<f64>,
    pub k: usize,
    pub similarity: Similarity,
}

impl DensityReport {
    /// Row indices ordered from least to most dense; outlier candidates first.
    pub fn outlier_ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.per_point_density.len()).collect();
        idx.sort_by(|&a, &b| {
            self.per_point_density[a]
                .total_cmp(&self.per_point_density[b])
                .then(a.cmp(&b))
        });
        idx
    }
}

/// Mean similarity of every row to its `k` most similar other rows.
///
/// Ties at the k-th neighbor are broken by ascending row index.
pub fn knn_density(emb: &EmbeddingMatrix, k: usize, similarity: Similarity) -> Result<DensityReport> {
    let n = emb.n_rows();
    if n < 2 {
        return Err(Error::arg("knn density needs at least two points"));
    }
    if k < 1 || k > n - 1 {
        return Err(Error::arg(format!("k = {k} outside 1..={}", n - 1)));
    }
    if n > MAX_EXACT_POINTS {
        return Err(Error::TooLarge(format!(
            "{n} points exceed the exact neighbor-search limit of {MAX_EXACT_POINTS}; sample the matrix first"
        )));
    }
    let norms: Vec<f64> = emb.rows().map(norm).collect();
    if similarity == Similarity::Cosine {
        if let Some(i) = norms.iter().position(|&x| x == 0.0) {
            return Err(Error::undefined(format!(
                "row {:?} has zero norm; cosine similarity is undefined",
                emb.labels()[i]
            )));
        }
    }
    let sim = |i: usize, j: usize| match similarity {
        Similarity::Cosine => (dot(emb.row(i), emb.row(j)) / (norms[i] * norms[j])).clamp(-1.0, 1.0),
        Similarity::InverseEuclidean => 1.0 / (1.0 + euclidean_unchecked(emb.row(i), emb.row(j))),
    };
    let per_point: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut sims: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (sim(i, j), j)).collect();
            let order = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
            if k < sims.len() {
                sims.select_nth_unstable_by(k - 1, order);
            }
            sims[..k].iter().map(|s| s.0).sum::<f64>() / k as f64
        })
        .collect();
    let global = per_point.iter().sum::<f64>() / n as f64;
    Ok(DensityReport {
        global_density: global,
        per_point_density: per_point,
        k,
        similarity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolumeMode {
    #[default]
    BoundingBox,
    /// Assumes data pre-normalized into the unit hypercube (volume 1).
    UnitHypercube,
}

impl VolumeMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            VolumeMode::BoundingBox => "bounding-box",
            VolumeMode::UnitHypercube => "unit-hypercube",
        }
    }
}

impl std::str::FromStr for VolumeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bounding-box" => Ok(VolumeMode::BoundingBox),
            "unit-hypercube" => Ok(VolumeMode::UnitHypercube),
            _ => Err(Error::arg(format!("unknown volume mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataDensity {
    /// `n / volume`; `None` when the raw volume product over- or underflows.
    pub density: Option<f64>,
    /// `ln n − Σ ln extentᵢ`.
    pub log_density: f64,
    pub volume_mode: VolumeMode,
    /// Zero-extent dimensions whose extent was replaced by an epsilon-scaled span.
    pub degenerate_dims: Vec<usize>,
}

/// Samples per unit of volume of the embedding space.
pub fn data_density(emb: &EmbeddingMatrix, mode: VolumeMode) -> Result<DataDensity> {
    let n = emb.n_rows() as f64;
    let mut degenerate = Vec::new();
    let extents: Vec<f64> = match mode {
        VolumeMode::UnitHypercube => vec![1.0; emb.dim()],
        VolumeMode::BoundingBox => (0..emb.dim())
            .map(|j| {
                let (lo, hi) = emb
                    .rows()
                    .map(|r| r[j])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                let span = hi - lo;
                if span > 0.0 {
                    span
                } else {
                    degenerate.push(j);
                    f64::EPSILON * lo.abs().max(1.0)
                }
            })
            .collect(),
    };
    let log_volume: f64 = extents.iter().map(|e| e.ln()).sum();
    if !log_volume.is_finite() {
        return Err(Error::undefined("bounding volume is not finite"));
    }
    let volume: f64 = extents.iter().product();
    let density = (volume.is_finite() && volume > 0.0)
        .then(|| n / volume)
        .filter(|d| d.is_finite());
    Ok(DataDensity {
        density,
        log_density: n.ln() - log_volume,
        volume_mode: mode,
        degenerate_dims: degenerate,
    })
}
