#ifndef DMETER_H
#define DMETER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DmStatus {
  DM_STATUS_OK = 0,
  DM_STATUS_INVALID_ARGUMENT = 1,
  DM_STATUS_UNDEFINED = 2,
  DM_STATUS_INVALID_KERNEL = 3,
  DM_STATUS_TOO_LARGE = 4,
  DM_STATUS_IO = 5,
  DM_STATUS_PARSE = 6,
  DM_STATUS_SCHEMA_MISMATCH = 7,
  DM_STATUS_JSON = 8,
  DM_STATUS_NULL_POINTER = 9,
  DM_STATUS_INVALID_UTF8 = 10,
  DM_STATUS_PANIC = 11,
} DmStatus;

// Ingested corpus.
typedef struct DmCorpus DmCorpus;

// Measurement report.
typedef struct DmReport DmReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer is
// valid until the next library call on the same thread.
const char *dm_last_error_message(void);

// Library version as a static string.
const char *dm_version(void);

// Ingest a corpus file. `format` is "jsonl", "plaintext" or "csv";
// `tokenizer_spec` may be null for the default.
//
// # Safety
// String arguments must be null or NUL-terminated; `out_corpus` must be writable.
enum DmStatus dm_corpus_open(const char *path,
                             const char *format,
                             const char *tokenizer_spec,
                             struct DmCorpus **out_corpus);

// Build a corpus from `n` in-memory texts with ids "0".."n-1".
//
// # Safety
// `texts` must point to `n` NUL-terminated strings.
enum DmStatus dm_corpus_from_texts(const char *const *texts,
                                   size_t n,
                                   const char *tokenizer_spec,
                                   struct DmCorpus **out_corpus);

// # Safety
// `corpus` must be null or a handle from this library, not yet freed.
void dm_corpus_free(struct DmCorpus *corpus);

// # Safety
// `corpus` must be a live handle; `out_len` must be writable.
enum DmStatus dm_corpus_len(const struct DmCorpus *corpus, size_t *out_len);

// Edit distance between two strings, counted in Unicode scalar values.
//
// # Safety
// `a` and `b` must be NUL-terminated; `out_distance` must be writable.
enum DmStatus dm_levenshtein(const char *a, const char *b, size_t *out_distance);

// Vendi score of an `n` x `n` row-major similarity matrix.
//
// # Safety
// `matrix` must point to `n * n` doubles; `out_score` must be writable.
enum DmStatus dm_vendi_score(const double *matrix, size_t n, double *out_score);

// Measure a corpus. `metrics` is a comma-separated family list or null for
// all; `created_at` may be null to use the clock.
//
// # Safety
// `corpus` must be a live handle; `out_report` must be writable.
enum DmStatus dm_report_assemble(const struct DmCorpus *corpus,
                                 const char *metrics,
                                 const char *created_at,
                                 struct DmReport **out_report);

// Parse a report from its JSON form.
//
// # Safety
// `json` must be NUL-terminated; `out_report` must be writable.
enum DmStatus dm_report_from_json(const char *json, struct DmReport **out_report);

// Serialize a report. Release the string with `dm_string_free`.
//
// # Safety
// `report` must be a live handle; `out_json` must be writable.
enum DmStatus dm_report_to_json(const struct DmReport *report, char **out_json);

// Number of measurements in the report that failed.
//
// # Safety
// `report` must be a live handle; `out_count` must be writable.
enum DmStatus dm_report_failure_count(const struct DmReport *report, size_t *out_count);

// # Safety
// `report` must be null or a handle from this library, not yet freed.
void dm_report_free(struct DmReport *report);

// Compare two reports and return the delta table as JSON.
//
// # Safety
// Both reports must be live handles; `out_json` must be writable.
enum DmStatus dm_compare(const struct DmReport *baseline,
                         const struct DmReport *candidate,
                         char **out_json);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void dm_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DMETER_H */
