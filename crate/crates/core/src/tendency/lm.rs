use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, TokenizerConfig};
use crate::{Error, Result};

/// Symbol standing for every token unseen in training.
pub const OOV: &str = "<unk>";

/// Additively smoothed unigram or bigram model with an explicit OOV outcome.
///
/// Outcomes are the training vocabulary plus [`OOV`]. Bigram contexts include
/// a start-of-record symbol; a context never seen in training falls back to
/// the unigram distribution.
#[derive(Debug, Clone)]
pub struct NgramLm {
    order: u8,
    smoothing: f64,
    tokenizer: TokenizerConfig,
    vocab: HashMap<String, usize>,
    // indexed by outcome id; OOV is the last slot and always zero
    unigram: Vec<u64>,
    total: u64,
    bigram: HashMap<(usize, usize), u64>,
    context_totals: HashMap<usize, u64>,
}

impl NgramLm {
    /// Trains on `corpus`. `order` must be 1 or 2 and `smoothing` finite and ≥ 0.
    pub fn train(corpus: &Corpus, order: u8, smoothing: f64) -> Result<Self> {
        if !(1..=2).contains(&order) {
            return Err(Error::arg(format!("model order must be 1 or 2, got {order}")));
        }
        if !smoothing.is_finite() || smoothing < 0.0 {
            return Err(Error::arg("smoothing must be finite and non-negative"));
        }
        if corpus.total_tokens() == 0 {
            return Err(Error::arg("cannot train a language model on an empty corpus"));
        }
        let vocab: HashMap<String, usize> = corpus
            .vocabulary()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let v = vocab.len();
        let mut unigram = vec![0u64; v + 1];
        for (t, c) in corpus.token_counts().iter() {
            unigram[vocab[t]] = c;
        }
        let mut lm = NgramLm {
            order,
            smoothing,
            tokenizer: *corpus.tokenizer(),
            vocab,
            unigram,
            total: corpus.total_tokens(),
            bigram: HashMap::new(),
            context_totals: HashMap::new(),
        };
        if order == 2 {
            let bos = lm.bos();
            for toks in corpus.tokens() {
                let mut ctx = bos;
                for t in toks {
                    let w = lm.vocab[t];
                    *lm.bigram.entry((ctx, w)).or_insert(0) += 1;
                    *lm.context_totals.entry(ctx).or_insert(0) += 1;
                    ctx = w;
                }
            }
        }
        Ok(lm)
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn tokenizer(&self) -> &TokenizerConfig {
        &self.tokenizer
    }

    /// Training vocabulary size, excluding [`OOV`].
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn oov(&self) -> usize {
        self.vocab.len()
    }

    fn bos(&self) -> usize {
        self.vocab.len() + 1
    }

    fn id(&self, token: &str) -> usize {
        self.vocab.get(token).copied().unwrap_or(self.oov())
    }

    fn outcomes(&self) -> f64 {
        (self.vocab.len() + 1) as f64
    }

    fn unigram_prob(&self, w: usize) -> f64 {
        let a = self.smoothing;
        (self.unigram[w] as f64 + a) / (self.total as f64 + a * self.outcomes())
    }

    fn cond_prob(&self, ctx: usize, w: usize) -> f64 {
        if self.order == 1 {
            return self.unigram_prob(w);
        }
        let a = self.smoothing;
        let seen = self.context_totals.get(&ctx).copied().unwrap_or(0) as f64;
        let denom = seen + a * self.outcomes();
        if denom == 0.0 {
            return self.unigram_prob(w);
        }
        let c = self.bigram.get(&(ctx, w)).copied().unwrap_or(0) as f64;
        (c + a) / denom
    }

    /// Probability of `token` (unigram model) or `token` after `previous`
    /// (bigram model; `None` means start of record).
    pub fn prob(&self, previous: Option<&str>, token: &str) -> f64 {
        let ctx = previous.map_or(self.bos(), |p| self.id(p));
        self.cond_prob(ctx, self.id(token))
    }

    /// Natural-log probability of a whole token sequence.
    pub fn log_prob(&self, tokens: &[String]) -> f64 {
        let mut ctx = self.bos();
        let mut lp = 0.0;
        for t in tokens {
            let w = self.id(t);
            lp += self.cond_prob(ctx, w).ln();
            ctx = w;
        }
        lp
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordPerplexity {
    pub id: String,
    pub n_tokens: u64,
    /// Total natural-log probability.
    pub log_prob: f64,
    /// `None` for records without tokens.
    pub perplexity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perplexity {
    pub perplexity: f64,
    pub n_tokens: u64,
    pub log_prob: f64,
    /// Some token had zero probability; `perplexity` is infinite.
    pub infinite: bool,
    pub per_record: Vec<RecordPerplexity>,
}

impl Perplexity {
    fn aggregate(per_record: Vec<RecordPerplexity>) -> Result<Self> {
        let n_tokens: u64 = per_record.iter().map(|r| r.n_tokens).sum();
        if n_tokens == 0 {
            return Err(Error::undefined("perplexity of a corpus without tokens"));
        }
        let log_prob: f64 = per_record.iter().map(|r| r.log_prob).sum();
        let perplexity = (-log_prob / n_tokens as f64).exp();
        Ok(Perplexity {
            perplexity,
            n_tokens,
            log_prob,
            infinite: perplexity.is_infinite(),
            per_record,
        })
    }

    /// Record ids ordered from most to least surprising; ties by input order.
    pub fn anomaly_ranking(&self) -> Vec<&str> {
        let mut rs: Vec<(usize, &RecordPerplexity)> = self
            .per_record
            .iter()
            .enumerate()
            .filter(|(_, r)| r.perplexity.is_some())
            .collect();
        rs.sort_by(|a, b| b.1.perplexity.unwrap().total_cmp(&a.1.perplexity.unwrap()).then(a.0.cmp(&b.0)));
        rs.into_iter().map(|(_, r)| r.id.as_str()).collect()
    }
}

fn record_perplexity(id: &str, n_tokens: u64, log_prob: f64) -> RecordPerplexity {
    RecordPerplexity {
        id: id.to_owned(),
        n_tokens,
        log_prob,
        perplexity: (n_tokens > 0).then(|| (-log_prob / n_tokens as f64).exp()),
    }
}

/// `exp(−(1/N) Σ ln p(tokenᵢ | context))` of `corpus` under `lm`.
///
/// The corpus must have been tokenized with the model's tokenizer config.
pub fn perplexity(lm: &NgramLm, corpus: &Corpus) -> Result<Perplexity> {
    if corpus.tokenizer() != lm.tokenizer() {
        return Err(Error::arg(format!(
            "tokenizer mismatch: model trained with {}, corpus tokenized with {}",
            lm.tokenizer(),
            corpus.tokenizer()
        )));
    }
    let per_record = corpus
        .records()
        .par_iter()
        .zip(corpus.tokens().par_iter())
        .map(|(r, toks)| record_perplexity(&r.id, toks.len() as u64, lm.log_prob(toks)))
        .collect();
    Perplexity::aggregate(per_record)
}

/// One line of an external log-probability file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogprobEntry {
    pub id: String,
    /// Total natural-log probability of the record.
    pub logprob: f64,
    pub n_tokens: u64,
}

/// Perplexity from externally computed per-record log-probabilities.
pub fn perplexity_from_logprobs(entries: &[LogprobEntry]) -> Result<Perplexity> {
    if let Some(e) = entries.iter().find(|e| e.logprob > 0.0 || e.logprob.is_nan()) {
        return Err(Error::arg(format!("record {:?} has log-probability {} > 0", e.id, e.logprob)));
    }
    Perplexity::aggregate(
        entries
            .iter()
            .map(|e| record_perplexity(&e.id, e.n_tokens, e.logprob))
            .collect(),
    )
}

/// Reads a JSONL file of `{"id", "logprob", "n_tokens"}` objects.
pub fn read_logprobs(path: impl AsRef<Path>) -> Result<Vec<LogprobEntry>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: LogprobEntry = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(entry);
    }
    Ok(out)
}
