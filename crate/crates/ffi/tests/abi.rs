use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use dmeter_ffi::*;

fn cs(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = dm_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

unsafe fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
    dm_string_free(p);
    s
}

#[test]
fn corpus_report_and_compare_round_trip() {
    let texts = [cs("the cat sat"), cs("the dog ran"), cs("the cat sat")];
    let ptrs: Vec<_> = texts.iter().map(|t| t.as_ptr()).collect();
    unsafe {
        let mut corpus = ptr::null_mut();
        assert_eq!(dm_corpus_from_texts(ptrs.as_ptr(), ptrs.len(), ptr::null(), &mut corpus), DmStatus::Ok);
        let mut n = 0;
        assert_eq!(dm_corpus_len(corpus, &mut n), DmStatus::Ok);
        assert_eq!(n, 3);

        let mut report = ptr::null_mut();
        let created = cs("2024-01-01T00:00:00Z");
        let metrics = cs("tendency,quality");
        assert_eq!(dm_report_assemble(corpus, metrics.as_ptr(), created.as_ptr(), &mut report), DmStatus::Ok);
        let mut failures = 99;
        assert_eq!(dm_report_failure_count(report, &mut failures), DmStatus::Ok);
        assert_eq!(failures, 0);

        let mut json = ptr::null_mut();
        assert_eq!(dm_report_to_json(report, &mut json), DmStatus::Ok);
        let text = take_string(json);
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["created_at"], "2024-01-01T00:00:00Z");
        assert_eq!(doc["measurements"]["quality.redundancy.exact"]["value"]["excess_duplicates"], 1);

        let again = cs(&text);
        let mut parsed = ptr::null_mut();
        assert_eq!(dm_report_from_json(again.as_ptr(), &mut parsed), DmStatus::Ok);
        let mut delta = ptr::null_mut();
        assert_eq!(dm_compare(report, parsed, &mut delta), DmStatus::Ok);
        let delta: serde_json::Value = serde_json::from_str(&take_string(delta)).unwrap();
        for row in delta["rows"].as_array().unwrap() {
            if row["comparable"].as_bool().unwrap() {
                assert_eq!(row["absolute_delta"].as_f64(), Some(0.0));
            }
        }

        dm_report_free(parsed);
        dm_report_free(report);
        dm_corpus_free(corpus);
    }
}

#[test]
fn open_file_and_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.txt");
    std::fs::write(&path, "one line\nanother line\n").unwrap();
    let p = cs(path.to_str().unwrap());
    let fmt = cs("plaintext");
    unsafe {
        let mut corpus = ptr::null_mut();
        assert_eq!(dm_corpus_open(p.as_ptr(), fmt.as_ptr(), ptr::null(), &mut corpus), DmStatus::Ok);
        assert!(dm_last_error_message().is_null());
        let mut n = 0;
        dm_corpus_len(corpus, &mut n);
        assert_eq!(n, 2);

        let mut report = ptr::null_mut();
        let bad = cs("nope");
        assert_eq!(dm_report_assemble(corpus, bad.as_ptr(), ptr::null(), &mut report), DmStatus::InvalidArgument);
        assert!(report.is_null());
        assert!(last_error().contains("nope"));
        dm_corpus_free(corpus);

        let missing = cs(dir.path().join("missing.txt").to_str().unwrap());
        let mut other = ptr::null_mut();
        assert_eq!(dm_corpus_open(missing.as_ptr(), fmt.as_ptr(), ptr::null(), &mut other), DmStatus::Io);
        assert!(last_error().contains("missing.txt"));
        let xml = cs("xml");
        assert_eq!(dm_corpus_open(p.as_ptr(), xml.as_ptr(), ptr::null(), &mut other), DmStatus::InvalidArgument);
        assert_eq!(dm_corpus_open(ptr::null(), fmt.as_ptr(), ptr::null(), &mut other), DmStatus::NullPointer);
        assert_eq!(dm_corpus_len(ptr::null(), &mut n), DmStatus::NullPointer);

        let junk = cs("{ not json");
        let mut r = ptr::null_mut();
        assert_eq!(dm_report_from_json(junk.as_ptr(), &mut r), DmStatus::Json);

        let bytes = [0xffu8, 0];
        let mut d = 0;
        assert_eq!(dm_levenshtein(bytes.as_ptr().cast(), bytes.as_ptr().cast(), &mut d), DmStatus::InvalidUtf8);

        dm_corpus_free(ptr::null_mut());
        dm_report_free(ptr::null_mut());
        dm_string_free(ptr::null_mut());
    }
}

#[test]
fn scalar_functions() {
    let (a, b) = (cs("kitten"), cs("sitting"));
    let mut d = 0;
    unsafe {
        assert_eq!(dm_levenshtein(a.as_ptr(), b.as_ptr(), &mut d), DmStatus::Ok);
        assert_eq!(d, 3);
        let mut v = 0.0;
        let id = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        assert_eq!(dm_vendi_score(id.as_ptr(), 3, &mut v), DmStatus::Ok);
        assert!((v - 3.0).abs() < 1e-9);
        let asym = [1.0, 0.5, 0.0, 1.0];
        assert_eq!(dm_vendi_score(asym.as_ptr(), 2, &mut v), DmStatus::InvalidArgument);
        let indefinite = [1.0, 1.0, -1.0, 1.0, 1.0, 1.0, -1.0, 1.0, 1.0];
        assert_eq!(dm_vendi_score(indefinite.as_ptr(), 3, &mut v), DmStatus::InvalidKernel);
        assert!(!last_error().is_empty());
        assert_eq!(dm_vendi_score(ptr::null(), 2, &mut v), DmStatus::NullPointer);
    }
    let version = unsafe { CStr::from_ptr(dm_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}

#[test]
fn generated_header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/dmeter.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["dm_corpus_open", "dm_report_assemble", "dm_compare", "dm_string_free", "DM_STATUS_SCHEMA_MISMATCH", "typedef struct DmCorpus DmCorpus"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"dmeter.h\"\nint main(void) { DmCorpus *c = 0; size_t n; return dm_corpus_len(c, &n) == DM_STATUS_NULL_POINTER ? 0 : 1; }\n",
    )
    .unwrap();
    let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", concat!(env!("CARGO_MANIFEST_DIR"), "/include")])
        .arg(&src)
        .status()
    else {
        eprintln!("no C compiler available, header syntax not checked");
        return;
    };
    assert!(status.success());
}
