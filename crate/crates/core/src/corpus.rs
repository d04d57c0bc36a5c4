//! Ingestion of raw text into an immutable [`Corpus`] snapshot.
//!
//! A corpus holds the records in source order, their token streams under a
//! fixed [`TokenizerConfig`], the token frequency table and a content
//! fingerprint. Malformed input records are skipped and logged in
//! [`Corpus::ingest_errors`]; only an unreadable source is fatal.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;
use unicode_segmentation::UnicodeSegmentation;

use crate::{Error, Result};

/// A single atomic instance of the dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<i64>,
}

impl Record {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Record {
            id: id.into(),
            text: text.into(),
            attributes: BTreeMap::new(),
            timestamp: None,
        }
    }

    pub fn with_attribute(mut self, name: impl Into<String>, label: impl Into<String>) -> Self {
        self.attributes.insert(name.into(), label.into());
        self
    }

    pub fn with_timestamp(mut self, ts: i64) -> Self {
        self.timestamp = Some(ts);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenizerMode {
    /// Unicode word boundaries; pure-punctuation segments are dropped.
    UnicodeWord,
    Whitespace,
    /// One token per non-whitespace character.
    Character,
}

impl TokenizerMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TokenizerMode::UnicodeWord => "unicode-word",
            TokenizerMode::Whitespace => "whitespace",
            TokenizerMode::Character => "character",
        }
    }
}

impl FromStr for TokenizerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unicode-word" => Ok(TokenizerMode::UnicodeWord),
            "whitespace" => Ok(TokenizerMode::Whitespace),
            "character" => Ok(TokenizerMode::Character),
            other => Err(Error::arg(format!(
                "unknown tokenizer mode {other:?} (expected unicode-word, whitespace or character)"
            ))),
        }
    }
}

/// Tokenization settings. Measurements are only comparable under equal configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub mode: TokenizerMode,
    pub case_fold: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            mode: TokenizerMode::UnicodeWord,
            case_fold: true,
        }
    }
}

impl fmt::Display for TokenizerConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.mode.as_str())?;
        if self.case_fold {
            write!(f, "+fold")?;
        }
        Ok(())
    }
}

impl FromStr for TokenizerConfig {
    type Err = Error;

    /// Parses `mode` or `mode+fold`, e.g. `unicode-word+fold`.
    fn from_str(s: &str) -> Result<Self> {
        let (mode, case_fold) = match s.strip_suffix("+fold") {
            Some(m) => (m, true),
            None => (s, false),
        };
        Ok(TokenizerConfig {
            mode: mode.parse()?,
            case_fold,
        })
    }
}

/// Splits `text` into tokens under `config`. Empty text yields no tokens.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    let folded;
    let text = if config.case_fold {
        folded = text.to_lowercase();
        folded.as_str()
    } else {
        text
    };
    match config.mode {
        TokenizerMode::UnicodeWord => text.unicode_words().map(str::to_owned).collect(),
        TokenizerMode::Whitespace => text.split_whitespace().map(str::to_owned).collect(),
        TokenizerMode::Character => text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect(),
    }
}

/// Item counts with a cached total. Zero counts are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable<T: Ord> {
    entries: BTreeMap<T, u64>,
    total: u64,
}

impl<T: Ord> Default for FrequencyTable<T> {
    fn default() -> Self {
        FrequencyTable {
            entries: BTreeMap::new(),
            total: 0,
        }
    }
}

impl<T: Ord> FrequencyTable<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, item: T, count: u64) {
        if count == 0 {
            return;
        }
        *self.entries.entry(item).or_insert(0) += count;
        self.total += count;
    }

    pub fn merge(mut self, other: FrequencyTable<T>) -> Self {
        // fold the smaller table into the larger one
        let (mut big, small) = if self.entries.len() >= other.entries.len() {
            (std::mem::take(&mut self), other)
        } else {
            (other, self)
        };
        for (item, c) in small.entries {
            big.add(item, c);
        }
        big
    }

    pub fn get(&self, item: &T) -> u64 {
        self.entries.get(item).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct items.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, u64)> {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &T> {
        self.entries.keys()
    }

    pub fn counts(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.values().copied()
    }

    /// Counts sorted descending; ties keep item order.
    pub fn ranked_counts(&self) -> Vec<u64> {
        let mut c: Vec<u64> = self.counts().collect();
        c.sort_unstable_by(|a, b| b.cmp(a));
        c
    }
}

impl<T: Ord> FromIterator<T> for FrequencyTable<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut ft = FrequencyTable::new();
        for item in iter {
            ft.add(item, 1);
        }
        ft
    }
}

impl<T: Ord> FromIterator<(T, u64)> for FrequencyTable<T> {
    fn from_iter<I: IntoIterator<Item = (T, u64)>>(iter: I) -> Self {
        let mut ft = FrequencyTable::new();
        for (item, c) in iter {
            ft.add(item, c);
        }
        ft
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Plaintext,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "plaintext" | "txt" => Ok(Format::Plaintext),
            "csv" => Ok(Format::Csv),
            other => Err(Error::arg(format!(
                "unknown input format {other:?} (expected jsonl, plaintext or csv)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub format: Format,
    pub tokenizer: TokenizerConfig,
    pub text_field: String,
    pub id_field: String,
    pub timestamp_field: String,
    /// CSV columns read as categorical attributes. JSONL uses the `attributes` object.
    pub attribute_columns: Vec<String>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            format: Format::Jsonl,
            tokenizer: TokenizerConfig::default(),
            text_field: "text".into(),
            id_field: "id".into(),
            timestamp_field: "timestamp".into(),
            attribute_columns: Vec::new(),
        }
    }
}

impl IngestOptions {
    pub fn new(format: Format) -> Self {
        IngestOptions {
            format,
            ..Default::default()
        }
    }
}

/// A skipped input record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestError {
    pub line: usize,
    pub message: String,
}

/// Immutable snapshot of a tokenized record collection.
#[derive(Debug, Clone)]
pub struct Corpus {
    records: Vec<Record>,
    tokens: Vec<Vec<String>>,
    tokenizer: TokenizerConfig,
    token_counts: FrequencyTable<String>,
    fingerprint: String,
    ingest_errors: Vec<IngestError>,
}

impl Corpus {
    /// Builds a corpus from records already in memory.
    ///
    /// Fails if two records share an id.
    pub fn from_records(records: Vec<Record>, tokenizer: TokenizerConfig) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::arg(format!("duplicate record id {:?}", r.id)));
            }
        }
        Ok(Self::build(records, tokenizer, Vec::new()))
    }

    /// Convenience constructor: one record per text, ids are the indices.
    pub fn from_texts<S: AsRef<str>>(texts: &[S], tokenizer: TokenizerConfig) -> Self {
        let records = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Record::new(i.to_string(), t.as_ref()))
            .collect();
        Self::build(records, tokenizer, Vec::new())
    }

    fn build(records: Vec<Record>, tokenizer: TokenizerConfig, ingest_errors: Vec<IngestError>) -> Self {
        let tokens: Vec<Vec<String>> = records
            .par_iter()
            .map(|r| tokenize(&r.text, &tokenizer))
            .collect();
        let token_counts = tokens
            .par_iter()
            .fold(FrequencyTable::new, |mut ft, toks| {
                for t in toks {
                    ft.add(t.clone(), 1);
                }
                ft
            })
            .reduce(FrequencyTable::new, FrequencyTable::merge);
        let fingerprint = fingerprint_records(&records);
        Corpus {
            records,
            tokens,
            tokenizer,
            token_counts,
            fingerprint,
            ingest_errors,
        }
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    /// Token streams, aligned with [`Corpus::records`].
    pub fn tokens(&self) -> &[Vec<String>] {
        &self.tokens
    }

    pub fn tokenizer(&self) -> &TokenizerConfig {
        &self.tokenizer
    }

    pub fn token_counts(&self) -> &FrequencyTable<String> {
        &self.token_counts
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &String> {
        self.token_counts.keys()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.token_counts.len()
    }

    pub fn total_tokens(&self) -> u64 {
        self.token_counts.total()
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn ingest_errors(&self) -> &[IngestError] {
        &self.ingest_errors
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// N-gram counts computed within record boundaries.
    pub fn ngrams(&self, n: usize) -> Result<FrequencyTable<Vec<String>>> {
        ngrams(self, n)
    }
}

/// Counts n-grams of `n` consecutive tokens inside each record.
pub fn ngrams(corpus: &Corpus, n: usize) -> Result<FrequencyTable<Vec<String>>> {
    if n < 1 {
        return Err(Error::arg("n-gram order must be at least 1"));
    }
    Ok(corpus
        .tokens
        .par_iter()
        .fold(FrequencyTable::new, |mut ft, toks| {
            for w in toks.windows(n) {
                ft.add(w.to_vec(), 1);
            }
            ft
        })
        .reduce(FrequencyTable::new, FrequencyTable::merge))
}

/// Text normalization used for fingerprints: NFC, trailing whitespace trimmed.
pub fn normalize_for_fingerprint(text: &str) -> String {
    text.nfc().collect::<String>().trim_end().to_owned()
}

fn fingerprint_records(records: &[Record]) -> String {
    let mut h = Sha256::new();
    for r in records {
        let norm = normalize_for_fingerprint(&r.text);
        h.update((norm.len() as u64).to_le_bytes());
        h.update(norm.as_bytes());
    }
    hex(&h.finalize())
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    use std::fmt::Write;
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Reads `path` into a corpus. Only an unreadable source is an error.
pub fn ingest(path: impl AsRef<Path>, opts: &IngestOptions) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(BufReader::new(file), opts).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn ingest_reader<R: Read>(reader: R, opts: &IngestOptions) -> Result<Corpus> {
    let mut errors = Vec::new();
    let records = match opts.format {
        Format::Jsonl => read_jsonl(BufReader::new(reader), opts, &mut errors)?,
        Format::Plaintext => read_plaintext(BufReader::new(reader), &mut errors)?,
        Format::Csv => read_csv(reader, opts, &mut errors)?,
    };
    Ok(Corpus::build(records, opts.tokenizer, errors))
}

struct IdTracker(HashSet<String>);

impl IdTracker {
    fn claim(&mut self, id: &str, line: usize, errors: &mut Vec<IngestError>) -> bool {
        if self.0.insert(id.to_owned()) {
            true
        } else {
            errors.push(IngestError {
                line,
                message: format!("duplicate record id {id:?}"),
            });
            false
        }
    }
}

fn lines<R: BufRead>(mut reader: R) -> impl Iterator<Item = std::io::Result<(usize, Vec<u8>)>> {
    let mut line_no = 0;
    std::iter::from_fn(move || {
        let mut buf = Vec::new();
        match reader.read_until(b'\n', &mut buf) {
            Ok(0) => None,
            Ok(_) => {
                line_no += 1;
                if buf.last() == Some(&b'\n') {
                    buf.pop();
                    if buf.last() == Some(&b'\r') {
                        buf.pop();
                    }
                }
                Some(Ok((line_no, buf)))
            }
            Err(e) => Some(Err(e)),
        }
    })
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<input>", e)
}

fn read_plaintext<R: BufRead>(reader: R, errors: &mut Vec<IngestError>) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for item in lines(reader) {
        let (line, bytes) = item.map_err(io_err)?;
        match String::from_utf8(bytes) {
            Ok(text) => out.push(Record::new(line.to_string(), text)),
            Err(_) => errors.push(IngestError {
                line,
                message: "invalid UTF-8".into(),
            }),
        }
    }
    Ok(out)
}

fn read_jsonl<R: BufRead>(reader: R, opts: &IngestOptions, errors: &mut Vec<IngestError>) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    let mut ids = IdTracker(HashSet::new());
    for item in lines(reader) {
        let (line, bytes) = item.map_err(io_err)?;
        if bytes.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        match parse_json_record(&bytes, line, opts) {
            Ok(rec) => {
                if ids.claim(&rec.id, line, errors) {
                    out.push(rec);
                }
            }
            Err(message) => errors.push(IngestError { line, message }),
        }
    }
    Ok(out)
}

fn parse_json_record(bytes: &[u8], line: usize, opts: &IngestOptions) -> std::result::Result<Record, String> {
    use serde_json::Value;
    let value: Value = serde_json::from_slice(bytes).map_err(|e| format!("malformed JSON: {e}"))?;
    let obj = value.as_object().ok_or("record is not a JSON object")?;
    let text = match obj.get(&opts.text_field) {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(format!("field {:?} is not a string", opts.text_field)),
        None => return Err(format!("missing field {:?}", opts.text_field)),
    };
    let id = match obj.get(&opts.id_field) {
        None | Some(Value::Null) => line.to_string(),
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(_) => return Err(format!("field {:?} must be a string or number", opts.id_field)),
    };
    let mut rec = Record::new(id, text);
    match obj.get("attributes") {
        None | Some(Value::Null) => {}
        Some(Value::Object(map)) => {
            for (k, v) in map {
                match v {
                    Value::String(s) => {
                        rec.attributes.insert(k.clone(), s.clone());
                    }
                    _ => return Err(format!("attribute {k:?} is not a string")),
                }
            }
        }
        Some(_) => return Err("field \"attributes\" is not an object".into()),
    }
    match obj.get(&opts.timestamp_field) {
        None | Some(Value::Null) => {}
        Some(v) => {
            rec.timestamp = Some(
                v.as_i64()
                    .ok_or_else(|| format!("field {:?} is not an integer", opts.timestamp_field))?,
            )
        }
    }
    Ok(rec)
}

fn read_csv<R: Read>(reader: R, opts: &IngestOptions, errors: &mut Vec<IngestError>) -> Result<Vec<Record>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) => {
            return match e.into_kind() {
                csv::ErrorKind::Io(io) => Err(io_err(io)),
                other => {
                    errors.push(IngestError {
                        line: 1,
                        message: format!("unreadable CSV header: {other:?}"),
                    });
                    Ok(Vec::new())
                }
            };
        }
    };
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    let col = |name: &str| headers.iter().position(|h| h == name);
    let text_col = col(&opts.text_field).ok_or_else(|| {
        Error::arg(format!("CSV header has no text column {:?}", opts.text_field))
    })?;
    let id_col = col(&opts.id_field);
    let ts_col = col(&opts.timestamp_field);
    let attr_cols: Vec<(String, usize)> = opts
        .attribute_columns
        .iter()
        .filter_map(|a| col(a).map(|i| (a.clone(), i)))
        .collect();

    let mut out = Vec::new();
    let mut ids = IdTracker(HashSet::new());
    let mut row = csv::ByteRecord::new();
    loop {
        let line = rdr.position().line() as usize;
        match rdr.read_byte_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                if let csv::ErrorKind::Io(_) = e.kind() {
                    return Err(io_err(match e.into_kind() {
                        csv::ErrorKind::Io(io) => io,
                        _ => unreachable!(),
                    }));
                }
                errors.push(IngestError {
                    line,
                    message: format!("malformed CSV row: {e}"),
                });
                continue;
            }
        }
        let field = |i: usize| -> std::result::Result<String, String> {
            std::str::from_utf8(&row[i])
                .map(str::to_owned)
                .map_err(|_| format!("column {i} is not valid UTF-8"))
        };
        let parsed = (|| -> std::result::Result<Record, String> {
            let text = field(text_col)?;
            let id = match id_col {
                Some(i) => field(i)?,
                None => line.to_string(),
            };
            let mut rec = Record::new(id, text);
            if let Some(i) = ts_col {
                let raw = field(i)?;
                if !raw.trim().is_empty() {
                    rec.timestamp = Some(
                        raw.trim()
                            .parse()
                            .map_err(|_| format!("timestamp {raw:?} is not an integer"))?,
                    );
                }
            }
            for (name, i) in &attr_cols {
                let v = field(*i)?;
                if !v.is_empty() {
                    rec.attributes.insert(name.clone(), v);
                }
            }
            Ok(rec)
        })();
        match parsed {
            Ok(rec) => {
                if ids.claim(&rec.id, line, errors) {
                    out.push(rec);
                }
            }
            Err(message) => errors.push(IngestError { line, message }),
        }
    }
    Ok(out)
}
