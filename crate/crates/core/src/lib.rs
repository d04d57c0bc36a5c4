//! Corpus measurement engine.
//!
//! `dmeter` computes data measurements over text corpora and embedding
//! matrices and writes them into versioned, deterministic reports that can be
//! compared batch against batch.
//!
//! Measurements are grouped into families:
//!
//! - **distance**: [`vectors::euclidean`], [`vectors::cosine_similarity`],
//!   [`distance::levenshtein`], [`distance::kl_divergence`],
//!   [`distance::emd_1d`], [`distance::emd_discrete`],
//!   [`distance::word_movers_distance`]
//! - **density**: [`density::knn_density`], [`density::data_density`]
//! - **diversity**: [`diversity::gini_diversity`], [`diversity::shannon_entropy`],
//!   [`diversity::vendi_score`], [`diversity::ngram_diversity`],
//!   [`diversity::embedding_dispersion`], [`diversity::subset_diversity`]
//! - **tendency**: [`tendency::summarize`], [`tendency::burstiness`],
//!   [`tendency::zipf_fit`], [`tendency::NgramLm`], [`tendency::perplexity`]
//! - **association**: [`association::build_cooccurrence`], [`association::pmi`],
//!   [`association::npmi`], [`association::pearson`], [`association::spearman`]
//! - **quality**: [`quality::find_duplicates`], [`quality::redundancy_entropy`],
//!   [`quality::flesch_reading_ease`]
//!
//! All logarithms are natural logarithms. Infinite results (for example a
//! KL divergence against a distribution with missing support) are returned as
//! IEEE infinities rather than errors; the report layer turns them into
//! string flags.

pub mod association;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod density;
pub mod distance;
pub mod diversity;
mod error;
pub mod quality;
pub mod report;
pub mod tendency;
pub mod vectors;

pub use corpus::{ingest, ingest_reader, tokenize, Corpus, FrequencyTable, Format, IngestOptions, Record, TokenizerConfig, TokenizerMode};
pub use error::{Error, Result};
pub use report::{assemble_report, compare, BatchDelta, MeasurementReport, MetricFamily, ReportConfig};
pub use vectors::EmbeddingMatrix;
