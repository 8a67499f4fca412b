#ifndef GAP_GAP_H
#define GAP_GAP_H

/* C interface to the GAP orchestration engine.
 *
 * Every function returns a gap_status. On failure the calling thread's last
 * error message is available from gap_last_error(). Strings returned through
 * `char** out` parameters are owned by the caller and released with
 * gap_string_free(). */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define GAP_API __declspec(dllexport)
#else
#define GAP_API __attribute__((visibility("default")))
#endif

typedef enum gap_status {
    GAP_OK = 0,
    GAP_E_SEED_BLOB_MISSING,
    GAP_E_INVALID_SEED,
    GAP_E_UNCONFIRMED_RECORDING,
    GAP_E_GENERATION_FULL,
    GAP_E_INDEX_MISMATCH,
    GAP_E_DUPLICATE_VOTE,
    GAP_E_INVALID_CHOICE,
    GAP_E_QUORUM_CLOSED,
    GAP_E_QUORUM_INCOMPLETE,
    GAP_E_NOT_TALLIED,
    GAP_E_CHAIN_INCOMPLETE,
    GAP_E_INVALID_STATE,
    GAP_E_INVALID_CONFIG,
    GAP_E_NO_WORK_AVAILABLE,
    GAP_E_ROLE_MISMATCH,
    GAP_E_NOT_ELIGIBLE,
    GAP_E_CONFIRMATION_REQUIRED,
    GAP_E_TRIAL_EXPIRED,
    GAP_E_ALREADY_SUBMITTED,
    GAP_E_INSUFFICIENT_STIMULI,
    GAP_E_UNKNOWN_ENTITY,
    GAP_E_INVALID_ANNOTATION,
    GAP_E_INCOMPLETE_ANSWERS,
    GAP_E_UNDEFINED_CORRELATION,
    GAP_E_INCOMPLETE_SCREENING,
    GAP_E_TOO_FEW_CANDIDATES,
    GAP_E_INVALID_GENERATION,
    GAP_E_INSUFFICIENT_DATA,
    GAP_E_DEGENERATE_BANDWIDTH,
    GAP_E_EMPTY_TOKEN,
    GAP_E_INSUFFICIENT_LABELS,
    GAP_E_UNDEFINED_SKEWNESS,
    GAP_E_EMPTY_INPUT,
    GAP_E_INVALID_EVENT,
    GAP_E_STORAGE_ERROR,
    GAP_E_CORRUPT_LOG,
    GAP_E_IMPORT_ERROR,
    GAP_E_INVALID_ARGUMENT,
    GAP_E_INTERNAL
} gap_status;

typedef struct gap_engine gap_engine;

GAP_API const char* gap_version(void);
GAP_API const char* gap_status_name(gap_status status);
/* Message of the last failed call on this thread, or "" after a success. */
GAP_API const char* gap_last_error(void);
GAP_API void gap_string_free(char* s);

/* Lowercase hex SHA-256 of `len` bytes into out[65] (NUL-terminated). */
GAP_API gap_status gap_content_digest(const uint8_t* data, size_t len, char out[65]);

/* Opens an engine. `config_json` may be NULL for defaults; `config_dir`
 * anchors relative paths inside it. A NULL or empty `data_dir` keeps all
 * state in memory. */
GAP_API gap_status gap_engine_open(const char* config_json, const char* config_dir, const char* data_dir,
                                   gap_engine** out);
/* Opens an existing data directory using the setup stored in it. */
GAP_API gap_status gap_engine_open_existing(const char* data_dir, gap_engine** out);
GAP_API void gap_engine_close(gap_engine* engine);

/* Serves one JSON route. `query_json` is an object of query parameters (may be
 * NULL). The response body is written to *response_json and its HTTP status to
 * *http_status. Route errors are reported through the HTTP status and body;
 * the return value is GAP_OK unless the call itself could not be made. */
GAP_API gap_status gap_engine_request(gap_engine* engine, const char* method, const char* path,
                                      const char* query_json, const char* body, int* http_status,
                                      char** response_json);
/* POST /trials/{trial_id}/creation with the multipart fields already split out. */
GAP_API gap_status gap_engine_submit_creation(gap_engine* engine, const char* trial_id, const uint8_t* audio,
                                              size_t audio_len, int confirmed, int* http_status,
                                              char** response_json);

/* Canonical JSON of the full engine state. */
GAP_API gap_status gap_engine_state(gap_engine* engine, char** state_json);
/* `what` is "corpus" (JSON), "events" (JSON lines) or "wordcounts" (CSV). */
GAP_API gap_status gap_engine_export(gap_engine* engine, const char* what, char** out);
GAP_API gap_status gap_engine_snapshot(gap_engine* engine, uint64_t* seq);
GAP_API gap_status gap_engine_reclaim(gap_engine* engine, size_t* expired);

/* Runs a full simulated experiment and writes simrun.json, annotations.csv,
 * events.jsonl, state.json, corpus.json, final_stimuli.txt and trend.csv into
 * `out_dir`. A short JSON summary goes to *summary_json (may be NULL). */
GAP_API gap_status gap_simulate(const char* config_json, uint64_t seed, const char* out_dir, char** summary_json);

/* Runs the validation analysis over an annotation CSV and writes the report
 * into `out_dir`. `options_json` may be NULL; recognised keys: seed, n_boot,
 * draw, balance_target, exclude_flagged_annotators, final_stimuli (array). */
GAP_API gap_status gap_analyze(const char* annotations_csv, const char* out_dir, const char* options_json,
                               char** summary_json);

#ifdef __cplusplus
}
#endif

#endif
