//! The `dmeter` command line.
//!
//! Standard output carries human-readable summaries; machine output (reports,
//! deltas, association tables) goes only to files named by `--out`.
//!
//! Exit codes: 0 success, 1 fatal error, 2 report written but some
//! measurement failed.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::association::{build_cooccurrence, parse_target_terms, top_associations, ContextMode, Weighting};
use crate::config::{parse_orders, ConfigFile};
use crate::quality::{find_duplicates, redundancy_entropy, Normalization};
use crate::report::{num, summary_line, ReportInputs};
use crate::tendency::read_logprobs;
use crate::vectors::load_embeddings;
use crate::{assemble_report, compare, ingest, Error, Format, IngestOptions, MeasurementReport, MetricFamily, ReportConfig, Result, TokenizerConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dmeter", version, about = "Measure text corpora and compare collection batches")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Corpus file (.jsonl, .csv or plain text)
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Input format: jsonl, csv or plaintext. Inferred from the extension by default
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Tokenizer: unicode-word, whitespace or character, optionally with `+fold`
    #[arg(long, global = true)]
    pub tokenizer: Option<String>,
    /// Run configuration file; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file for machine-readable results
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Comma-separated metric families, or `all`
    #[arg(long, global = true)]
    pub metrics: Option<String>,
    /// Embedding matrix in text-vec format
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
    /// Target-term list, one term per line
    #[arg(long, global = true)]
    pub targets: Option<PathBuf>,
    /// Reserved; every computation is deterministic
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a measurement report for a corpus
    Measure(MeasureArgs),
    /// Compare two measurement reports
    Compare(CompareArgs),
    /// Top co-terms by normalized PMI for each target term
    Assoc(AssocArgs),
    /// Exact and normalized duplicate detection
    Dedup(DedupArgs),
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Per-record log-probabilities from an external model (JSONL)
    #[arg(long)]
    pub logprobs: Option<PathBuf>,
    /// Name of the embedding model, recorded in measurement params
    #[arg(long)]
    pub embedding_model: Option<String>,
    /// Report timestamp override (otherwise SOURCE_DATE_EPOCH or the clock)
    #[arg(long)]
    pub created_at: Option<String>,
    /// Token whose recurrence gaps feed burstiness when there are no timestamps
    #[arg(long)]
    pub burstiness_token: Option<String>,
    /// Comma-separated n-gram orders for n-gram diversity
    #[arg(long)]
    pub ngram_orders: Option<String>,
    /// Neighbors for kNN density
    #[arg(long)]
    pub knn_k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub baseline: PathBuf,
    pub candidate: PathBuf,
}

#[derive(Debug, Args)]
pub struct AssocArgs {
    /// Co-terms per target
    #[arg(long)]
    pub k: Option<usize>,
    /// Sliding-window contexts of this many tokens instead of whole records
    #[arg(long)]
    pub window: Option<usize>,
    /// Additive smoothing of the co-occurrence probabilities
    #[arg(long)]
    pub smoothing: Option<f64>,
    /// binary or frequency
    #[arg(long)]
    pub weighting: Option<String>,
}

#[derive(Debug, Args)]
pub struct DedupArgs {
    /// exact or fold-and-collapse
    #[arg(long, default_value = "exact")]
    pub normalization: String,
    /// Largest clusters to list
    #[arg(long)]
    pub top: Option<usize>,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FATAL } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{text}") } else { write!(stdout, "{text}") };
            return code;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_FATAL
        }
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let file = match &cli.global.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let ctx = Resolved { g: &cli.global, file };
    match &cli.command {
        Command::Measure(a) => measure(&ctx, a, stdout, stderr),
        Command::Compare(a) => cmd_compare(&ctx, a, stdout),
        Command::Assoc(a) => assoc(&ctx, a, stdout, stderr),
        Command::Dedup(a) => dedup(&ctx, a, stdout, stderr),
    }
}

/// Flags resolved against the configuration file.
struct Resolved<'a> {
    g: &'a GlobalArgs,
    file: ConfigFile,
}

impl Resolved<'_> {
    fn path(&self, flag: &Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.clone().or_else(|| self.file.path_value(key))
    }

    fn input(&self) -> Result<PathBuf> {
        self.path(&self.g.input, "input.path")
            .ok_or_else(|| Error::arg("no input corpus: pass --input or set [input] path"))
    }

    fn out(&self) -> Option<PathBuf> {
        self.path(&self.g.out, "output.path")
    }

    fn ingest_options(&self, input: &Path) -> Result<IngestOptions> {
        let format = match self.g.format.as_deref().or(self.file.get("input.format")) {
            Some(f) => f.parse()?,
            None => infer_format(input),
        };
        let tokenizer: TokenizerConfig = match &self.g.tokenizer {
            Some(t) => t.parse()?,
            None => self.file.parsed("input.tokenizer")?.unwrap_or_default(),
        };
        let mut opts = IngestOptions {
            format,
            tokenizer,
            ..IngestOptions::default()
        };
        if let Some(v) = self.file.get("input.text_field") {
            opts.text_field = v.to_owned();
        }
        if let Some(v) = self.file.get("input.id_field") {
            opts.id_field = v.to_owned();
        }
        if let Some(v) = self.file.get("input.timestamp_field") {
            opts.timestamp_field = v.to_owned();
        }
        if let Some(v) = self.file.list("input.attributes") {
            opts.attribute_columns = v;
        }
        Ok(opts)
    }

    fn targets(&self) -> Result<Option<Vec<String>>> {
        self.path(&self.g.targets, "inputs.targets")
            .map(|p| {
                std::fs::read_to_string(&p)
                    .map(|t| parse_target_terms(&t))
                    .map_err(|e| Error::io(p, e))
            })
            .transpose()
    }

    fn report_config(&self) -> Result<ReportConfig> {
        let mut cfg = ReportConfig::default();
        self.file.apply(&mut cfg)?;
        Ok(cfg)
    }
}

fn infer_format(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("jsonl") | Some("json") | Some("ndjson") => Format::Jsonl,
        Some("csv") => Format::Csv,
        _ => Format::Plaintext,
    }
}

fn report_ingest_errors(corpus: &crate::Corpus, input: &Path, stderr: &mut dyn Write) {
    let errors = corpus.ingest_errors();
    if !errors.is_empty() {
        let _ = writeln!(stderr, "warning: skipped {} malformed record(s) in {}", errors.len(), input.display());
        for e in errors.iter().take(5) {
            let _ = writeln!(stderr, "  line {}: {}", e.line, e.message);
        }
    }
}

fn measure(ctx: &Resolved, a: &MeasureArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    // selection is validated before any input is read
    let selection = MetricFamily::parse_list(
        ctx.g.metrics.as_deref().or(ctx.file.get("metrics.select")).unwrap_or("all"),
    )?;
    let mut cfg = ctx.report_config()?;
    if let Some(m) = &a.embedding_model {
        cfg.embedding_model = Some(m.clone());
    }
    if let Some(t) = &a.created_at {
        cfg.created_at = Some(t.clone());
    }
    if let Some(t) = &a.burstiness_token {
        cfg.burstiness_token = Some(t.clone());
    }
    if let Some(o) = &a.ngram_orders {
        cfg.ngram_orders = parse_orders(o)?;
    }
    if let Some(k) = a.knn_k {
        cfg.knn_k = k;
    }
    let input = ctx.input()?;
    let out = ctx.out().unwrap_or_else(|| PathBuf::from("report.json"));
    let opts = ctx.ingest_options(&input)?;

    let embeddings = ctx.path(&ctx.g.embeddings, "inputs.embeddings").map(load_embeddings).transpose()?;
    let targets = ctx.targets()?;
    let logprobs = ctx.path(&a.logprobs, "inputs.logprobs").map(read_logprobs).transpose()?;

    let corpus = ingest(&input, &opts)?;
    report_ingest_errors(&corpus, &input, stderr);
    let inputs = ReportInputs {
        embeddings: embeddings.as_ref(),
        targets: targets.as_deref(),
        logprobs: logprobs.as_deref(),
    };
    let report = assemble_report(&corpus, &selection, &cfg, &inputs)?;
    report.write(&out)?;

    for (name, m) in &report.measurements {
        let _ = writeln!(stdout, "{}", summary_line(name, m));
    }
    let failures = report.failures().count();
    let _ = writeln!(stdout, "report written to {}", out.display());
    if failures > 0 {
        let _ = writeln!(stderr, "{failures} measurement(s) failed; see the report for details");
        return Ok(EXIT_PARTIAL);
    }
    Ok(EXIT_OK)
}

fn cmd_compare(ctx: &Resolved, a: &CompareArgs, stdout: &mut dyn Write) -> Result<i32> {
    let baseline = MeasurementReport::read(&a.baseline)?;
    let candidate = MeasurementReport::read(&a.candidate)?;
    let mut delta = compare(&baseline, &candidate)?;
    delta.baseline_ref = a.baseline.display().to_string();
    delta.candidate_ref = a.candidate.display().to_string();
    if let Some(out) = ctx.out() {
        std::fs::write(&out, delta.to_json()).map_err(|e| Error::io(&out, e))?;
    }
    let _ = write!(stdout, "{}", delta.to_table());
    Ok(EXIT_OK)
}

fn assoc(ctx: &Resolved, a: &AssocArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let mut cfg = ctx.report_config()?;
    if let Some(k) = a.k {
        cfg.top_k = k;
    }
    if let Some(w) = a.window {
        if w == 0 {
            return Err(Error::arg("window width must be at least 1"));
        }
        cfg.context_mode = ContextMode::Window(w);
    }
    if let Some(s) = a.smoothing {
        cfg.assoc_smoothing = s;
    }
    if let Some(w) = &a.weighting {
        cfg.weighting = w.parse::<Weighting>()?;
    }
    let targets = ctx
        .targets()?
        .ok_or_else(|| Error::arg("assoc needs a target-term list: pass --targets"))?;
    let input = ctx.input()?;
    let corpus = ingest(&input, &ctx.ingest_options(&input)?)?;
    report_ingest_errors(&corpus, &input, stderr);

    let set = targets.iter().cloned().collect();
    let table = build_cooccurrence(&corpus, Some(&set), cfg.context_mode, cfg.weighting)?;
    let rows = top_associations(&table, &targets, cfg.top_k, cfg.assoc_smoothing)?;

    if let Some(out) = ctx.out() {
        let json_rows: Vec<_> = rows
            .iter()
            .map(|r| {
                json!({
                    "target": r.target,
                    "warning": r.warning,
                    "co_terms": r.co_terms.iter().map(|(t, v, n)| json!({"term": t, "npmi": num(*v), "pair_count": n})).collect::<Vec<_>>(),
                })
            })
            .collect();
        let doc = json!({
            "corpus_fingerprint": corpus.fingerprint(),
            "params": {
                "context": cfg.context_mode.to_string(),
                "k": cfg.top_k,
                "smoothing": num(cfg.assoc_smoothing),
                "tokenizer": corpus.tokenizer().to_string(),
                "weighting": cfg.weighting.as_str(),
            },
            "rows": json_rows,
        });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        std::fs::write(&out, text).map_err(|e| Error::io(&out, e))?;
    }

    let _ = writeln!(stdout, "context: {}, k = {}", cfg.context_mode, cfg.top_k);
    for r in &rows {
        let _ = writeln!(stdout, "{}", r.target);
        if let Some(w) = &r.warning {
            let _ = writeln!(stdout, "  warning: {w}");
        }
        let width = r.co_terms.iter().map(|(t, _, _)| t.chars().count()).max().unwrap_or(0);
        for (t, v, n) in &r.co_terms {
            let _ = writeln!(stdout, "  {t:<width$}  {v:>9.6}  {n:>8}");
        }
    }
    Ok(EXIT_OK)
}

fn dedup(ctx: &Resolved, a: &DedupArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let normalization: Normalization = a.normalization.parse()?;
    let top = match a.top {
        Some(t) => t,
        None => ctx.file.parsed("quality.dedup_top")?.unwrap_or(crate::quality::DEFAULT_TOP_CLUSTERS),
    };
    let input = ctx.input()?;
    let corpus = ingest(&input, &ctx.ingest_options(&input)?)?;
    report_ingest_errors(&corpus, &input, stderr);
    let report = find_duplicates(&corpus, normalization, top);
    let (h, by_convention) = redundancy_entropy(&report);

    if let Some(out) = ctx.out() {
        let mut doc = serde_json::to_value(&report)?;
        if let Some(o) = doc.as_object_mut() {
            o.insert("corpus_fingerprint".into(), corpus.fingerprint().into());
            o.insert("redundancy_entropy".into(), num(h));
        }
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        std::fs::write(&out, text).map_err(|e| Error::io(&out, e))?;
    }

    let _ = writeln!(
        stdout,
        "{} records, {} distinct, {} duplicate clusters, {} excess duplicates ({})",
        report.n_records,
        report.n_distinct,
        report.duplicate_clusters,
        report.excess_duplicates,
        normalization.as_str()
    );
    let _ = writeln!(
        stdout,
        "redundancy entropy {}{}",
        num(h),
        if by_convention { " (by convention)" } else { "" }
    );
    for c in &report.top_clusters {
        let sample: String = c.sample_text.chars().take(60).collect();
        let _ = writeln!(stdout, "  {:>6}  {}  {:?}", c.count, &c.fingerprint[..12.min(c.fingerprint.len())], sample);
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("dmeter").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_metric_fails_before_ingestion() {
        let (code, out, err) = run_capture(&["measure", "--input", "/nonexistent/x.jsonl", "--metrics", "tendency,bogus"]);
        assert_eq!(code, EXIT_FATAL);
        assert!(out.is_empty());
        assert!(err.contains("bogus") && err.contains("association"), "{err}");
        assert!(!err.contains("nonexistent"));
    }

    #[test]
    fn usage_errors_are_fatal() {
        assert_eq!(run_capture(&["frobnicate"]).0, EXIT_FATAL);
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn format_inference() {
        assert_eq!(infer_format(Path::new("a.JSONL")), Format::Jsonl);
        assert_eq!(infer_format(Path::new("a.csv")), Format::Csv);
        assert_eq!(infer_format(Path::new("a.txt")), Format::Plaintext);
    }
}
