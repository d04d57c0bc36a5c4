use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use super::{flags, num, opt_num, Measurement, MeasurementReport, MetricFamily, SCHEMA_VERSION};
use crate::association::{build_cooccurrence, top_associations, ContextMode, Weighting};
use crate::corpus::Corpus;
use crate::density::{data_density, knn_density, Similarity, VolumeMode};
use crate::diversity::{embedding_dispersion, gini_diversity, ngram_diversity, shannon_entropy, subset_diversity, vendi_score, NgramDenominator, SimilarityKernel};
use crate::quality::{find_duplicates, flesch_reading_ease, redundancy_entropy, Normalization};
use crate::tendency::{burstiness, perplexity, perplexity_from_logprobs, summarize, timestamp_gaps, token_recurrence_gaps, zipf_fit, LogprobEntry, NgramLm, SummaryStats, ZipfMethod};
use crate::vectors::{cosine_similarity, euclidean_unchecked, EmbeddingMatrix};
use crate::{Error, Result};

/// Rows above which embedding-pairwise measurements (Vendi, pairwise
/// distances) are skipped instead of computed.
pub const MAX_PAIRWISE_ROWS: usize = 2_000;

/// Parameters of every measurement in a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub ngram_orders: Vec<usize>,
    pub ngram_denominator: NgramDenominator,
    pub zipf_method: ZipfMethod,
    pub lm_order: u8,
    pub lm_smoothing: f64,
    pub knn_k: usize,
    pub similarity: Similarity,
    pub volume_mode: VolumeMode,
    pub top_k: usize,
    pub assoc_smoothing: f64,
    pub context_mode: ContextMode,
    pub weighting: Weighting,
    pub dedup_top: usize,
    /// Token whose recurrence gaps feed burstiness when records carry no timestamps.
    pub burstiness_token: Option<String>,
    /// Overrides the report timestamp. Otherwise `SOURCE_DATE_EPOCH`, then the clock.
    pub created_at: Option<String>,
    /// Name recorded for the embedding model in measurement params.
    pub embedding_model: Option<String>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            ngram_orders: vec![1, 2, 3],
            ngram_denominator: NgramDenominator::TotalNgrams,
            zipf_method: ZipfMethod::DiscreteMle,
            lm_order: 1,
            lm_smoothing: 1.0,
            knn_k: 5,
            similarity: Similarity::Cosine,
            volume_mode: VolumeMode::BoundingBox,
            top_k: 20,
            assoc_smoothing: 0.0,
            context_mode: ContextMode::Document,
            weighting: Weighting::Binary,
            dedup_top: crate::quality::DEFAULT_TOP_CLUSTERS,
            burstiness_token: None,
            created_at: None,
            embedding_model: None,
        }
    }
}

/// Optional external inputs. Measurements needing a missing input are
/// reported as skipped.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReportInputs<'a> {
    pub embeddings: Option<&'a EmbeddingMatrix>,
    pub targets: Option<&'a [String]>,
    /// Per-record log-probabilities from an external model; replaces the
    /// self-trained n-gram model for perplexity.
    pub logprobs: Option<&'a [LogprobEntry]>,
}

type Params = BTreeMap<String, Value>;

struct Ctx<'a> {
    corpus: &'a Corpus,
    cfg: &'a ReportConfig,
    inputs: ReportInputs<'a>,
    tokenizer: Value,
}

impl Ctx<'_> {
    fn token_params(&self) -> Params {
        let mut p = Params::new();
        p.insert("tokenizer".into(), self.tokenizer.clone());
        p
    }

    fn embedding_params(&self) -> Params {
        let mut p = Params::new();
        p.insert(
            "embedding_model".into(),
            self.cfg.embedding_model.clone().map_or(Value::String("unnamed".into()), Value::String),
        );
        if let Some(e) = self.inputs.embeddings {
            p.insert("embedding_rows".into(), e.n_rows().into());
            p.insert("embedding_dim".into(), e.dim().into());
        }
        p
    }
}

fn with(mut p: Params, key: &str, v: impl Into<Value>) -> Params {
    p.insert(key.into(), v.into());
    p
}

/// Runs `f`, stamping params and unit on the result. Errors become flagged
/// entries: `undefined` for inputs where the value has no definition,
/// `failed` otherwise.
fn entry(name: impl Into<String>, params: Params, unit: &str, f: impl FnOnce() -> Result<Measurement>) -> (String, Measurement) {
    let mut m = match f() {
        Ok(m) => m,
        Err(Error::Undefined(msg)) => Measurement::new(Value::String("undefined".into()), "")
            .flag(flags::UNDEFINED)
            .with_detail(msg),
        Err(e) => Measurement::new(Value::Null, "").flag(flags::FAILED).with_detail(e.to_string()),
    };
    m.params = params;
    m.unit = unit.into();
    (name.into(), m)
}

fn skipped(name: impl Into<String>, params: Params, unit: &str, reason: impl Into<String>) -> (String, Measurement) {
    let mut m = Measurement::new(Value::Null, unit).flag(flags::SKIPPED).with_detail(reason);
    m.params = params;
    (name.into(), m)
}

/// Serializes `v`, rounding floats to 12 significant digits and writing
/// missing values as `"undefined"`.
fn rounded<T: Serialize>(v: &T) -> Value {
    fn walk(v: Value) -> Value {
        match v {
            Value::Null => Value::String("undefined".into()),
            Value::Number(n) if n.is_f64() => num(n.as_f64().unwrap_or(f64::NAN)),
            Value::Array(a) => Value::Array(a.into_iter().map(walk).collect()),
            Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, walk(v))).collect()),
            other => other,
        }
    }
    walk(serde_json::to_value(v).expect("measurement values are serializable"))
}

fn stats_value(s: &SummaryStats) -> Value {
    rounded(s)
}

/// Assembles a report of the selected measurement families.
///
/// Families are computed concurrently; each measurement that cannot be
/// computed is recorded as a flagged entry rather than aborting the report.
pub fn assemble_report(corpus: &Corpus, selection: &[MetricFamily], cfg: &ReportConfig, inputs: &ReportInputs<'_>) -> Result<MeasurementReport> {
    if selection.is_empty() {
        return Err(Error::arg(format!("empty metric selection (valid: {})", MetricFamily::valid_names())));
    }
    validate(cfg)?;
    let selection: BTreeSet<MetricFamily> = selection.iter().copied().collect();
    let ctx = Ctx {
        corpus,
        cfg,
        inputs: *inputs,
        tokenizer: Value::String(corpus.tokenizer().to_string()),
    };

    let families: Vec<MetricFamily> = selection.into_iter().collect();
    let computed: Vec<Vec<(String, Measurement)>> = families
        .par_iter()
        .map(|f| match f {
            MetricFamily::Tendency => tendency(&ctx),
            MetricFamily::Diversity => diversity(&ctx),
            MetricFamily::Density => density(&ctx),
            MetricFamily::Distance => distance(&ctx),
            MetricFamily::Association => association(&ctx),
            MetricFamily::Quality => quality(&ctx),
        })
        .collect();

    let mut measurements: BTreeMap<String, Measurement> = corpus_counts(&ctx).into_iter().collect();
    for (name, m) in computed.into_iter().flatten() {
        measurements.insert(name, m);
    }
    Ok(MeasurementReport {
        corpus_fingerprint: corpus.fingerprint().to_owned(),
        created_at: created_at(cfg),
        measurements,
        schema_version: SCHEMA_VERSION.to_owned(),
        tokenizer_config: corpus.tokenizer().to_string(),
    })
}

fn validate(cfg: &ReportConfig) -> Result<()> {
    if cfg.ngram_orders.contains(&0) {
        return Err(Error::arg("n-gram orders must be at least 1"));
    }
    if cfg.knn_k == 0 {
        return Err(Error::arg("knn k must be at least 1"));
    }
    if !(cfg.lm_smoothing >= 0.0 && cfg.lm_smoothing.is_finite()) || !(cfg.assoc_smoothing >= 0.0 && cfg.assoc_smoothing.is_finite()) {
        return Err(Error::arg("smoothing must be finite and non-negative"));
    }
    Ok(())
}

fn created_at(cfg: &ReportConfig) -> String {
    if let Some(s) = &cfg.created_at {
        return s.clone();
    }
    let epoch = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|s| chrono::DateTime::from_timestamp(s, 0));
    epoch
        .unwrap_or_else(chrono::Utc::now)
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn corpus_counts(ctx: &Ctx) -> Vec<(String, Measurement)> {
    let c = ctx.corpus;
    vec![
        ("corpus.records".into(), Measurement::new(c.len().into(), "records")),
        (
            "corpus.tokens".into(),
            Measurement::new(c.total_tokens().into(), "tokens").param("tokenizer", ctx.tokenizer.clone()),
        ),
        (
            "corpus.vocabulary".into(),
            Measurement::new(c.vocabulary_size().into(), "types").param("tokenizer", ctx.tokenizer.clone()),
        ),
        (
            "corpus.ingest_errors".into(),
            Measurement::new(c.ingest_errors().len().into(), "lines"),
        ),
    ]
}

fn tendency(ctx: &Ctx) -> Vec<(String, Measurement)> {
    let c = ctx.corpus;
    let cfg = ctx.cfg;
    let mut out = Vec::new();

    out.push(entry("tendency.tokens_per_record", ctx.token_params(), "tokens", || {
        let lens: Vec<f64> = c.tokens().iter().map(|t| t.len() as f64).collect();
        Ok(Measurement::new(stats_value(&summarize(&lens)?), ""))
    }));
    out.push(entry("tendency.chars_per_record", with(Params::new(), "count", "unicode-scalar-values"), "characters", || {
        let lens: Vec<f64> = c.records().iter().map(|r| r.text.chars().count() as f64).collect();
        Ok(Measurement::new(stats_value(&summarize(&lens)?), ""))
    }));
    out.push(entry(
        "tendency.zipf",
        with(ctx.token_params(), "method", cfg.zipf_method.as_str()),
        "exponent",
        || {
            let fit = zipf_fit(c.token_counts(), cfg.zipf_method)?;
            let mut m = Measurement::new(
                json!({"alpha": num(fit.alpha), "ks_distance": num(fit.ks_distance), "n_ranks": fit.n_ranks}),
                "",
            );
            if fit.low_confidence {
                m.push_flag(flags::LOW_CONFIDENCE);
            }
            if fit.alpha_at_boundary {
                m.push_flag(flags::BOUNDARY);
            }
            Ok(m)
        },
    ));

    out.push(match ctx.inputs.logprobs {
        Some(entries) => {
            let mut m = entry("tendency.perplexity", with(Params::new(), "model", "external-logprobs"), "perplexity", || {
                perplexity_value(&perplexity_from_logprobs(entries)?)
            });
            m.1.provenance = super::Provenance::ExternalModel;
            m
        }
        None => {
            let params = with(
                with(with(ctx.token_params(), "model", "self-ngram"), "order", cfg.lm_order),
                "smoothing",
                num(cfg.lm_smoothing),
            );
            entry("tendency.perplexity", params, "perplexity", || {
                let lm = NgramLm::train(c, cfg.lm_order, cfg.lm_smoothing)?;
                perplexity_value(&perplexity(&lm, c)?)
            })
        }
    });

    let has_timestamps = c.records().iter().filter(|r| r.timestamp.is_some()).count() >= 2;
    out.push(if has_timestamps {
        entry("tendency.burstiness", with(Params::new(), "gaps", "timestamps"), "ratio", || {
            Ok(Measurement::scalar(burstiness(&timestamp_gaps(c))?, ""))
        })
    } else if let Some(tok) = &cfg.burstiness_token {
        let params = with(with(ctx.token_params(), "gaps", "token-recurrence"), "token", tok.as_str());
        entry("tendency.burstiness", params, "ratio", || {
            let gaps = token_recurrence_gaps(c, tok);
            if gaps.is_empty() {
                return Err(Error::undefined(format!("token {tok:?} occurs fewer than twice")));
            }
            Ok(Measurement::scalar(burstiness(&gaps)?, ""))
        })
    } else {
        skipped(
            "tendency.burstiness",
            Params::new(),
            "ratio",
            "records carry fewer than two timestamps and no burstiness token is configured",
        )
    });
    out
}

fn perplexity_value(p: &crate::tendency::Perplexity) -> Result<Measurement> {
    let mut m = Measurement::new(
        json!({"perplexity": num(p.perplexity), "n_tokens": p.n_tokens, "log_prob": num(p.log_prob)}),
        "",
    );
    m.flag_non_finite(p.perplexity);
    Ok(m)
}

fn diversity(ctx: &Ctx) -> Vec<(String, Measurement)> {
    let c = ctx.corpus;
    let cfg = ctx.cfg;
    let mut out = vec![
        entry("diversity.gini", ctx.token_params(), "probability", || {
            Ok(Measurement::scalar(gini_diversity(c.token_counts())?, ""))
        }),
        entry("diversity.shannon_entropy", ctx.token_params(), "nats", || {
            Ok(Measurement::scalar(shannon_entropy(c.token_counts())?, ""))
        }),
    ];
    for &n in &cfg.ngram_orders {
        let params = with(
            with(ctx.token_params(), "n", n),
            "denominator",
            cfg.ngram_denominator.as_str(),
        );
        out.push(entry(format!("diversity.ngram_diversity.n{n}"), params, "ratio", || {
            Ok(Measurement::scalar(ngram_diversity(c, n, cfg.ngram_denominator)?, ""))
        }));
    }

    let attributes: BTreeSet<&String> = c.records().iter().flat_map(|r| r.attributes.keys()).collect();
    for attr in attributes {
        out.push(entry(
            format!("diversity.subset.{attr}"),
            with(Params::new(), "attribute", attr.as_str()),
            "nats",
            || {
                let s = subset_diversity(c.records(), attr)?;
                let proportions: Map<String, Value> = s.proportions.iter().map(|(k, v)| (k.clone(), num(*v))).collect();
                Ok(Measurement::new(
                    json!({
                        "entropy": num(s.entropy),
                        "n_labeled": s.n_labeled,
                        "n_unlabeled": s.n_unlabeled,
                        "proportions": proportions,
                    }),
                    "",
                ))
            },
        ));
    }

    let params = with(ctx.embedding_params(), "kernel", "cosine");
    out.push(match ctx.inputs.embeddings {
        None => skipped("diversity.vendi", params, "effective items", "no embeddings supplied"),
        Some(e) if e.n_rows() > MAX_PAIRWISE_ROWS => skipped(
            "diversity.vendi",
            params,
            "effective items",
            format!("{} rows exceed the pairwise limit of {MAX_PAIRWISE_ROWS}", e.n_rows()),
        ),
        Some(e) => external(entry("diversity.vendi", params, "effective items", || {
            Ok(Measurement::scalar(vendi_score(&SimilarityKernel::cosine(e)?)?, ""))
        })),
    });
    let params = ctx.embedding_params();
    out.push(match ctx.inputs.embeddings {
        None => skipped("diversity.embedding_dispersion", params, "distance", "no embeddings supplied"),
        Some(e) => external(entry("diversity.embedding_dispersion", params, "distance", || {
            Ok(Measurement::scalar(embedding_dispersion(e)?, ""))
        })),
    });
    out
}

fn external(mut e: (String, Measurement)) -> (String, Measurement) {
    e.1.provenance = super::Provenance::ExternalModel;
    e
}

fn density(ctx: &Ctx) -> Vec<(String, Measurement)> {
    let cfg = ctx.cfg;
    let knn_params = with(with(ctx.embedding_params(), "k", cfg.knn_k), "similarity", cfg.similarity.as_str());
    let vol_params = with(ctx.embedding_params(), "volume_mode", cfg.volume_mode.as_str());
    let Some(e) = ctx.inputs.embeddings else {
        return vec![
            skipped("density.knn", knn_params, "similarity", "no embeddings supplied"),
            skipped("density.data_density", vol_params, "points per unit volume", "no embeddings supplied"),
        ];
    };
    vec![
        external(entry("density.knn", knn_params, "similarity", || {
            let d = knn_density(e, cfg.knn_k, cfg.similarity)?;
            let outliers: Vec<&str> = d.outlier_ranking().into_iter().take(5).map(|i| e.labels()[i].as_str()).collect();
            Ok(Measurement::new(json!({"global_density": num(d.global_density), "outliers": outliers}), ""))
        })),
        external(entry("density.data_density", vol_params, "points per unit volume", || {
            let d = data_density(e, cfg.volume_mode)?;
            let mut m = Measurement::new(
                json!({
                    "degenerate_dims": d.degenerate_dims,
                    "density": opt_num(d.density),
                    "log_density": num(d.log_density),
                }),
                "",
            );
            if !d.degenerate_dims.is_empty() {
                m.push_flag(flags::DEGENERATE);
            }
            Ok(m)
        })),
    ]
}

fn distance(ctx: &Ctx) -> Vec<(String, Measurement)> {
    let names = [("distance.pairwise_euclidean", "distance"), ("distance.pairwise_cosine", "similarity")];
    let params = ctx.embedding_params();
    let e = match ctx.inputs.embeddings {
        None => {
            return names
                .iter()
                .map(|(n, u)| skipped(*n, params.clone(), u, "no embeddings supplied"))
                .collect()
        }
        Some(e) if e.n_rows() > MAX_PAIRWISE_ROWS => {
            let reason = format!("{} rows exceed the pairwise limit of {MAX_PAIRWISE_ROWS}", e.n_rows());
            return names.iter().map(|(n, u)| skipped(*n, params.clone(), u, reason.clone())).collect();
        }
        Some(e) => e,
    };
    let n = e.n_rows();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    vec![
        external(entry(names[0].0, params.clone(), names[0].1, || {
            let d: Vec<f64> = pairs.par_iter().map(|&(i, j)| euclidean_unchecked(e.row(i), e.row(j))).collect();
            Ok(Measurement::new(stats_value(&summarize_pairs(&d)?), ""))
        })),
        external(entry(names[1].0, params.clone(), names[1].1, || {
            let s = pairs
                .par_iter()
                .map(|&(i, j)| cosine_similarity(e.row(i), e.row(j)))
                .collect::<Result<Vec<f64>>>()?;
            Ok(Measurement::new(stats_value(&summarize_pairs(&s)?), ""))
        })),
    ]
}

fn summarize_pairs(values: &[f64]) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::undefined("pairwise summary needs at least two rows"));
    }
    summarize(values)
}

fn association(ctx: &Ctx) -> Vec<(String, Measurement)> {
    let cfg = ctx.cfg;
    let params = with(
        with(
            with(
                with(ctx.token_params(), "context", ctx.cfg.context_mode.to_string()),
                "weighting",
                cfg.weighting.as_str(),
            ),
            "k",
            cfg.top_k,
        ),
        "smoothing",
        num(cfg.assoc_smoothing),
    );
    let targets = match ctx.inputs.targets {
        Some(t) if !t.is_empty() => t,
        _ => return vec![skipped("association.npmi", params, "npmi", "no target terms supplied")],
    };
    let set: BTreeSet<String> = targets.iter().cloned().collect();
    let rows = build_cooccurrence(ctx.corpus, Some(&set), cfg.context_mode, cfg.weighting)
        .and_then(|table| top_associations(&table, targets, cfg.top_k, cfg.assoc_smoothing));
    match rows {
        Err(e) => vec![entry("association.npmi", params, "npmi", || Err(e))],
        Ok(rows) => rows
            .into_iter()
            .map(|row| {
                let top: Vec<Value> = row
                    .co_terms
                    .iter()
                    .map(|(t, v, n)| json!({"term": t, "npmi": num(*v), "pair_count": n}))
                    .collect();
                let mut m = Measurement::new(json!({"n_co_terms": top.len(), "top": top}), "npmi");
                m.params = params.clone();
                if let Some(w) = row.warning {
                    m.push_flag("target-absent");
                    m.detail = Some(w);
                }
                (format!("association.npmi.{}", row.target), m)
            })
            .collect(),
    }
}

fn quality(ctx: &Ctx) -> Vec<(String, Measurement)> {
    let c = ctx.corpus;
    let mut out: Vec<(String, Measurement)> = [Normalization::Exact, Normalization::FoldAndCollapse]
        .into_par_iter()
        .map(|norm| {
            let params = with(with(Params::new(), "normalization", norm.as_str()), "top", ctx.cfg.dedup_top);
            entry(format!("quality.redundancy.{}", norm.as_str()), params, "records", || {
                let r = find_duplicates(c, norm, ctx.cfg.dedup_top);
                let (h, by_convention) = redundancy_entropy(&r);
                let top: Vec<Value> = r
                    .top_clusters
                    .iter()
                    .map(|cl| json!({"count": cl.count, "fingerprint": cl.fingerprint, "sample_text": cl.sample_text}))
                    .collect();
                let mut m = Measurement::new(
                    json!({
                        "duplicate_clusters": r.duplicate_clusters,
                        "excess_duplicates": r.excess_duplicates,
                        "n_distinct": r.n_distinct,
                        "n_records": r.n_records,
                        "redundancy_entropy": num(h),
                        "top_clusters": top,
                    }),
                    "",
                );
                if by_convention {
                    m.push_flag(flags::CONVENTION);
                }
                Ok(m)
            })
        })
        .collect();
    out.push(entry("quality.flesch_reading_ease", with(with(Params::new(), "syllables", "vowel-group-heuristic"), "sentences", "terminal-punctuation"), "score", || {
        let r = flesch_reading_ease(c)?;
        let mut v = stats_value(&r.summary);
        if let Value::Object(o) = &mut v {
            o.insert("skipped_records".into(), r.skipped.into());
        }
        Ok(Measurement::new(v, "").flag(flags::HEURISTIC))
    }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Record, TokenizerConfig};

    fn cfg() -> ReportConfig {
        ReportConfig {
            created_at: Some("2000-01-01T00:00:00Z".into()),
            ..ReportConfig::default()
        }
    }

    fn corpus(texts: &[&str]) -> Corpus {
        Corpus::from_texts(texts, TokenizerConfig::default())
    }

    #[test]
    fn tendency_on_tiny_corpus() {
        let c = corpus(&["a a b"]);
        let r = assemble_report(&c, &[MetricFamily::Tendency], &cfg(), &ReportInputs::default()).unwrap();
        let stats = &r.measurements["tendency.tokens_per_record"];
        assert_eq!(stats.value["mean"], json!(3.0));
        assert!(stats.params.contains_key("tokenizer"));
        let zipf = &r.measurements["tendency.zipf"];
        assert!(zipf.flags.contains(&flags::LOW_CONFIDENCE.to_string()));
        let ppl = &r.measurements["tendency.perplexity"];
        // add-one unigram over {a, b, <unk>}: p(a) = 3/6, p(b) = 2/6
        let want = (-(2.0 * 0.5f64.ln() + (1.0f64 / 3.0).ln()) / 3.0).exp();
        assert!((ppl.value["perplexity"].as_f64().unwrap() - want).abs() < 1e-9, "{}", ppl.value);
        assert_eq!(ppl.params["smoothing"], json!(1.0));
        assert!(r.measurements["tendency.burstiness"].is_skipped());
        assert!(!r.measurements.keys().any(|k| k.starts_with("diversity")));
    }

    #[test]
    fn embedding_metrics_skip_without_embeddings() {
        let c = corpus(&["one two", "three four"]);
        let r = assemble_report(&c, &MetricFamily::ALL, &cfg(), &ReportInputs::default()).unwrap();
        for name in ["diversity.vendi", "density.knn", "density.data_density", "distance.pairwise_euclidean", "association.npmi"] {
            let m = &r.measurements[name];
            assert!(m.is_skipped(), "{name}");
            assert!(m.detail.is_some());
        }
        assert!(r.measurements["diversity.gini"].flags.is_empty());
        assert_eq!(r.failures().count(), 0);
    }

    #[test]
    fn embeddings_are_external_provenance() {
        let c = corpus(&["a", "b", "c"]);
        let e = EmbeddingMatrix::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
        )
        .unwrap();
        let inputs = ReportInputs {
            embeddings: Some(&e),
            ..Default::default()
        };
        let cfg = ReportConfig { knn_k: 1, ..cfg() };
        let r = assemble_report(&c, &[MetricFamily::Diversity, MetricFamily::Density, MetricFamily::Distance], &cfg, &inputs).unwrap();
        for name in ["diversity.vendi", "density.knn", "density.data_density", "distance.pairwise_cosine"] {
            assert_eq!(r.measurements[name].provenance, super::super::Provenance::ExternalModel, "{name}");
            assert!(r.measurements[name].flags.is_empty(), "{name}: {:?}", r.measurements[name]);
        }
        assert_eq!(r.measurements["diversity.gini"].provenance, super::super::Provenance::SelfContained);
    }

    #[test]
    fn failures_are_isolated() {
        let c = corpus(&["", ""]);
        let r = assemble_report(&c, &[MetricFamily::Tendency, MetricFamily::Diversity], &cfg(), &ReportInputs::default()).unwrap();
        let gini = &r.measurements["diversity.gini"];
        assert_eq!(gini.flags, ["failed"]);
        assert!(gini.params.contains_key("tokenizer"));
        assert!(r.measurements["tendency.chars_per_record"].flags.is_empty());
        assert!(r.measurements["tendency.tokens_per_record"].params.contains_key("tokenizer"));
    }

    #[test]
    fn subset_and_timestamps() {
        let recs = vec![
            Record::new("1", "x").with_attribute("lang", "en").with_timestamp(0),
            Record::new("2", "y").with_attribute("lang", "fr").with_timestamp(10),
            Record::new("3", "z").with_timestamp(20),
        ];
        let c = Corpus::from_records(recs, TokenizerConfig::default()).unwrap();
        let r = assemble_report(&c, &MetricFamily::ALL, &cfg(), &ReportInputs::default()).unwrap();
        let s = &r.measurements["diversity.subset.lang"];
        assert_eq!(s.value["n_unlabeled"], json!(1));
        assert_eq!(r.measurements["tendency.burstiness"].value, json!(-1.0));
    }

    #[test]
    fn empty_selection_is_an_error() {
        let c = corpus(&["a"]);
        assert!(matches!(assemble_report(&c, &[], &cfg(), &ReportInputs::default()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn absent_target_row() {
        let c = corpus(&["x y", "x y", "z"]);
        let targets = vec!["x".to_string(), "nope".to_string()];
        let inputs = ReportInputs {
            targets: Some(&targets),
            ..Default::default()
        };
        let r = assemble_report(&c, &[MetricFamily::Association], &cfg(), &inputs).unwrap();
        assert_eq!(r.measurements["association.npmi.x"].value["top"][0]["term"], json!("y"));
        assert_eq!(r.measurements["association.npmi.x"].value["top"][0]["npmi"], json!(1.0));
        let absent = &r.measurements["association.npmi.nope"];
        assert_eq!(absent.value["n_co_terms"], json!(0));
        assert!(absent.flags.contains(&"target-absent".to_string()));
    }
}
