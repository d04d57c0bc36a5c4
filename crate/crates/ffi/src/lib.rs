//! C ABI for `dmeter`.
//!
//! Every fallible function returns a [`DmStatus`] and writes its result
//! through an out-pointer. On failure the message is available from
//! [`dm_last_error_message`] on the same thread until the next call.
//! Objects are opaque handles released with their `_free` function; strings
//! returned by the library are released with [`dm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use dmeter::diversity::{vendi_score, SimilarityKernel};
use dmeter::report::ReportInputs;
use dmeter::{Corpus, Error, Format, IngestOptions, MeasurementReport, MetricFamily, ReportConfig, TokenizerConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmStatus {
    Ok = 0,
    InvalidArgument = 1,
    Undefined = 2,
    InvalidKernel = 3,
    TooLarge = 4,
    Io = 5,
    Parse = 6,
    SchemaMismatch = 7,
    Json = 8,
    NullPointer = 9,
    InvalidUtf8 = 10,
    Panic = 11,
}

/// Ingested corpus.
pub struct DmCorpus(Corpus);

/// Measurement report.
pub struct DmReport(MeasurementReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(DmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidArgument(_) => DmStatus::InvalidArgument,
            Error::Undefined(_) => DmStatus::Undefined,
            Error::InvalidKernel(_) => DmStatus::InvalidKernel,
            Error::TooLarge(_) => DmStatus::TooLarge,
            Error::Io { .. } => DmStatus::Io,
            Error::Parse { .. } => DmStatus::Parse,
            Error::SchemaMismatch { .. } => DmStatus::SchemaMismatch,
            Error::Json(_) => DmStatus::Json,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DmStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DmStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(DmStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(DmStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(DmStatus::NullPointer, format!("{what} is null")))
}

fn out<T>(p: *mut T, what: &str) -> Result<*mut T, Failure> {
    if p.is_null() {
        Err(Failure(DmStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(p)
    }
}

fn tokenizer(s: Option<&str>) -> Result<TokenizerConfig, Failure> {
    Ok(s.map(str::parse).transpose()?.unwrap_or_default())
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn dm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn dm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Ingest a corpus file. `format` is "jsonl", "plaintext" or "csv";
/// `tokenizer_spec` may be null for the default.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out_corpus` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dm_corpus_open(
    path: *const c_char,
    format: *const c_char,
    tokenizer_spec: *const c_char,
    out_corpus: *mut *mut DmCorpus,
) -> DmStatus {
    guard(|| {
        let dst = out(out_corpus, "out_corpus")?;
        let path = str_arg(path, "path")?;
        let format: Format = str_arg(format, "format")?.parse()?;
        let opts = IngestOptions {
            tokenizer: tokenizer(opt_str_arg(tokenizer_spec, "tokenizer")?)?,
            ..IngestOptions::new(format)
        };
        let corpus = dmeter::ingest(Path::new(path), &opts)?;
        *dst = Box::into_raw(Box::new(DmCorpus(corpus)));
        Ok(())
    })
}

/// Build a corpus from `n` in-memory texts with ids "0".."n-1".
///
/// # Safety
/// `texts` must point to `n` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn dm_corpus_from_texts(
    texts: *const *const c_char,
    n: usize,
    tokenizer_spec: *const c_char,
    out_corpus: *mut *mut DmCorpus,
) -> DmStatus {
    guard(|| {
        let dst = out(out_corpus, "out_corpus")?;
        if texts.is_null() && n > 0 {
            return Err(Failure(DmStatus::NullPointer, "texts is null".into()));
        }
        let owned = (0..n)
            .map(|i| str_arg(*texts.add(i), "text").map(str::to_owned))
            .collect::<Result<Vec<_>, _>>()?;
        let tok = tokenizer(opt_str_arg(tokenizer_spec, "tokenizer")?)?;
        *dst = Box::into_raw(Box::new(DmCorpus(Corpus::from_texts(&owned, tok))));
        Ok(())
    })
}

/// # Safety
/// `corpus` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dm_corpus_free(corpus: *mut DmCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// # Safety
/// `corpus` must be a live handle; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dm_corpus_len(corpus: *const DmCorpus, out_len: *mut usize) -> DmStatus {
    guard(|| {
        let dst = out(out_len, "out_len")?;
        *dst = handle(corpus, "corpus")?.0.len();
        Ok(())
    })
}

/// Edit distance between two strings, counted in Unicode scalar values.
///
/// # Safety
/// `a` and `b` must be NUL-terminated; `out_distance` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dm_levenshtein(a: *const c_char, b: *const c_char, out_distance: *mut usize) -> DmStatus {
    guard(|| {
        let dst = out(out_distance, "out_distance")?;
        *dst = dmeter::distance::levenshtein(str_arg(a, "a")?, str_arg(b, "b")?);
        Ok(())
    })
}

/// Vendi score of an `n` x `n` row-major similarity matrix.
///
/// # Safety
/// `matrix` must point to `n * n` doubles; `out_score` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dm_vendi_score(matrix: *const f64, n: usize, out_score: *mut f64) -> DmStatus {
    guard(|| {
        let dst = out(out_score, "out_score")?;
        let len = n.checked_mul(n).ok_or_else(|| Failure(DmStatus::InvalidArgument, "n * n overflows".into()))?;
        if matrix.is_null() && len > 0 {
            return Err(Failure(DmStatus::NullPointer, "matrix is null".into()));
        }
        let values = if len == 0 { Vec::new() } else { std::slice::from_raw_parts(matrix, len).to_vec() };
        *dst = vendi_score(&SimilarityKernel::new(n, values, "caller")?)?;
        Ok(())
    })
}

/// Measure a corpus. `metrics` is a comma-separated family list or null for
/// all; `created_at` may be null to use the clock.
///
/// # Safety
/// `corpus` must be a live handle; `out_report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dm_report_assemble(
    corpus: *const DmCorpus,
    metrics: *const c_char,
    created_at: *const c_char,
    out_report: *mut *mut DmReport,
) -> DmStatus {
    guard(|| {
        let dst = out(out_report, "out_report")?;
        let corpus = &handle(corpus, "corpus")?.0;
        let families = match opt_str_arg(metrics, "metrics")? {
            Some(list) => MetricFamily::parse_list(list)?,
            None => MetricFamily::ALL.to_vec(),
        };
        let cfg = ReportConfig {
            created_at: opt_str_arg(created_at, "created_at")?.map(str::to_owned),
            ..ReportConfig::default()
        };
        let report = dmeter::assemble_report(corpus, &families, &cfg, &ReportInputs::default())?;
        *dst = Box::into_raw(Box::new(DmReport(report)));
        Ok(())
    })
}

/// Parse a report from its JSON form.
///
/// # Safety
/// `json` must be NUL-terminated; `out_report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dm_report_from_json(json: *const c_char, out_report: *mut *mut DmReport) -> DmStatus {
    guard(|| {
        let dst = out(out_report, "out_report")?;
        let report = MeasurementReport::from_json(str_arg(json, "json")?)?;
        *dst = Box::into_raw(Box::new(DmReport(report)));
        Ok(())
    })
}

/// Serialize a report. Release the string with `dm_string_free`.
///
/// # Safety
/// `report` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dm_report_to_json(report: *const DmReport, out_json: *mut *mut c_char) -> DmStatus {
    guard(|| {
        let dst = out(out_json, "out_json")?;
        *dst = c_string(handle(report, "report")?.0.to_json());
        Ok(())
    })
}

/// Number of measurements in the report that failed.
///
/// # Safety
/// `report` must be a live handle; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dm_report_failure_count(report: *const DmReport, out_count: *mut usize) -> DmStatus {
    guard(|| {
        let dst = out(out_count, "out_count")?;
        *dst = handle(report, "report")?.0.failures().count();
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dm_report_free(report: *mut DmReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Compare two reports and return the delta table as JSON.
///
/// # Safety
/// Both reports must be live handles; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dm_compare(
    baseline: *const DmReport,
    candidate: *const DmReport,
    out_json: *mut *mut c_char,
) -> DmStatus {
    guard(|| {
        let dst = out(out_json, "out_json")?;
        let delta = dmeter::compare(&handle(baseline, "baseline")?.0, &handle(candidate, "candidate")?.0)?;
        *dst = c_string(delta.to_json());
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
