//! Redundancy counting and readability scoring.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_segmentation::UnicodeSegmentation;

use crate::corpus::{hex, normalize_for_fingerprint, Corpus};
use crate::diversity::entropy_of_counts;
use crate::tendency::{summarize, SummaryStats};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// NFC and trailing whitespace trimmed, nothing else.
    #[default]
    Exact,
    /// Case-folded, whitespace runs collapsed to one space, ends trimmed.
    FoldAndCollapse,
}

impl Normalization {
    pub fn as_str(&self) -> &'static str {
        match self {
            Normalization::Exact => "exact",
            Normalization::FoldAndCollapse => "fold-and-collapse",
        }
    }

    pub fn apply(&self, text: &str) -> String {
        let base = normalize_for_fingerprint(text);
        match self {
            Normalization::Exact => base,
            Normalization::FoldAndCollapse => base.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" "),
        }
    }
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Normalization::Exact),
            "fold-and-collapse" => Ok(Normalization::FoldAndCollapse),
            _ => Err(Error::arg(format!("unknown normalization {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateCluster {
    pub fingerprint: String,
    pub count: usize,
    pub sample_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedundancyReport {
    pub n_records: usize,
    pub n_distinct: usize,
    /// Groups of two or more identical (normalized) records.
    pub duplicate_clusters: usize,
    /// `Σ (group size − 1)`.
    pub excess_duplicates: usize,
    /// Largest duplicate groups first, ties by fingerprint.
    pub top_clusters: Vec<DuplicateCluster>,
    pub normalization: Normalization,
    /// Sizes of every group, singletons included, in the same order as `top_clusters`.
    #[serde(skip)]
    cluster_sizes: Vec<usize>,
}

pub const DEFAULT_TOP_CLUSTERS: usize = 10;

/// Groups records by the fingerprint of their normalized text.
pub fn find_duplicates(corpus: &Corpus, normalization: Normalization, top: usize) -> RedundancyReport {
    let keyed: Vec<(String, usize)> = corpus
        .records()
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let digest = Sha256::digest(normalization.apply(&r.text).as_bytes());
            (hex(&digest), i)
        })
        .collect();
    // fingerprint -> (count, first record index)
    let mut groups: HashMap<String, (usize, usize)> = HashMap::new();
    for (fp, i) in keyed {
        groups.entry(fp).or_insert((0, i)).0 += 1;
    }
    let mut clusters: Vec<(String, usize, usize)> = groups.into_iter().map(|(fp, (c, i))| (fp, c, i)).collect();
    clusters.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let n_records = corpus.len();
    let duplicate_clusters = clusters.iter().filter(|c| c.1 >= 2).count();
    let top_clusters = clusters
        .iter()
        .filter(|c| c.1 >= 2)
        .take(top)
        .map(|(fp, c, i)| DuplicateCluster {
            fingerprint: fp.clone(),
            count: *c,
            sample_text: corpus.records()[*i].text.chars().take(200).collect(),
        })
        .collect();
    RedundancyReport {
        n_records,
        n_distinct: clusters.len(),
        duplicate_clusters,
        excess_duplicates: n_records - clusters.len(),
        top_clusters,
        normalization,
        cluster_sizes: clusters.iter().map(|c| c.1).collect(),
    }
}

impl RedundancyReport {
    pub fn cluster_sizes(&self) -> &[usize] {
        &self.cluster_sizes
    }
}

/// Entropy of the cluster-size distribution normalized by `ln n_records`.
///
/// 1 when every record is unique, 0 when all are identical. Corpora of fewer
/// than two records return 1 by convention; the boolean is then `true`.
pub fn redundancy_entropy(report: &RedundancyReport) -> (f64, bool) {
    if report.n_records < 2 {
        return (1.0, true);
    }
    let h = entropy_of_counts(report.cluster_sizes.iter().map(|&c| c as u64), report.n_records as u64);
    ((h / (report.n_records as f64).ln()).clamp(0.0, 1.0), false)
}

/// Syllable estimate: vowel groups (a, e, i, o, u, y), minus a silent trailing
/// `e`, at least one per word. A final `e` after a vowel or in a
/// consonant + `le` ending is not silent.
pub fn count_syllables(word: &str) -> usize {
    let w: Vec<char> = word.to_lowercase().chars().filter(|c| c.is_alphabetic()).collect();
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0;
    let mut prev_vowel = false;
    for &c in &w {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    let n = w.len();
    let silent_e = n >= 2 && w[n - 1] == 'e' && !is_vowel(w[n - 2]) && !(w[n - 2] == 'l' && n >= 3 && !is_vowel(w[n - 3]));
    if silent_e && groups > 1 {
        groups -= 1;
    }
    groups.max(1)
}

/// Sentences end at `.`, `!` or `?` followed by whitespace or end of text;
/// only segments containing a word count.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            let boundary = chars.peek().is_none_or(|(_, n)| n.is_whitespace());
            if boundary {
                let end = i + c.len_utf8();
                out.push(&text[start..end]);
                start = end;
            }
        }
    }
    out.push(&text[start..]);
    out.into_iter().filter(|s| s.unicode_words().next().is_some()).collect()
}

/// Per-record counts feeding the Flesch formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextCounts {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
}

pub fn text_counts(text: &str) -> TextCounts {
    let words: Vec<&str> = text.unicode_words().collect();
    TextCounts {
        words: words.len(),
        sentences: split_sentences(text).len(),
        syllables: words.iter().map(|w| count_syllables(w)).sum(),
    }
}

/// `206.835 − 1.015·(words/sentences) − 84.6·(syllables/words)`; `None` when
/// the text has no word or no sentence.
pub fn flesch_score(text: &str) -> Option<f64> {
    let c = text_counts(text);
    if c.words == 0 || c.sentences == 0 {
        return None;
    }
    Some(206.835 - 1.015 * (c.words as f64 / c.sentences as f64) - 84.6 * (c.syllables as f64 / c.words as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Readability {
    pub summary: SummaryStats,
    /// Per-record scores aligned with the corpus; `None` for skipped records.
    pub per_record: Vec<Option<f64>>,
    pub skipped: usize,
}

/// Flesch reading ease of every record, summarized across the corpus.
pub fn flesch_reading_ease(corpus: &Corpus) -> Result<Readability> {
    let per_record: Vec<Option<f64>> = corpus.records().par_iter().map(|r| flesch_score(&r.text)).collect();
    let scores: Vec<f64> = per_record.iter().flatten().copied().collect();
    if scores.is_empty() {
        return Err(Error::undefined("no record has a scoreable word and sentence"));
    }
    Ok(Readability {
        summary: summarize(&scores)?,
        skipped: per_record.len() - scores.len(),
        per_record,
    })
}
