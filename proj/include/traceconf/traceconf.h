/* C interface to the trace-confidence toolkit.
 *
 * All text crosses the boundary as NUL-terminated UTF-8. Strings returned
 * through `char**` are owned by the caller and released with tc_string_free.
 * On failure a function returns a non-zero tc_status and tc_last_error()
 * describes it; the message is thread-local and valid until the next call on
 * the same thread. */
#ifndef TRACECONF_TRACECONF_H
#define TRACECONF_TRACECONF_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(TRACECONF_BUILDING)
#    define TC_API __declspec(dllexport)
#  else
#    define TC_API __declspec(dllimport)
#  endif
#else
#  define TC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tc_status {
    TC_OK = 0,
    TC_ERR_PARSE = 1,
    TC_ERR_SCHEMA = 2,
    TC_ERR_INPUT = 3,
    TC_ERR_CONFIG = 4,
    TC_ERR_IO = 5,
    TC_ERR_STATE = 6,
    TC_ERR_DEGENERATE_LABELS = 7,
    TC_ERR_INSUFFICIENT_DATA = 8,
    TC_ERR_STRATIFICATION = 9,
    TC_ERR_REMOTE_PROVIDER = 10,
    TC_ERR_INVALID_ARGUMENT = 11,
    TC_ERR_INTERNAL = 12
} tc_status;

typedef struct tc_extractor tc_extractor;
typedef struct tc_model tc_model;

TC_API const char* tc_version(void);
TC_API const char* tc_last_error(void);
TC_API const char* tc_status_name(tc_status status);
/* Process exit code for a status: 0 ok, 2 input/config, 3 remote provider,
 * 4 degenerate data, 1 anything else. */
TC_API int tc_status_exit_code(tc_status status);
TC_API void tc_string_free(char* text);

/* Extraction. `config_json` is a run configuration object (provider,
 * nli_endpoint, egs_threshold, lexicon_overrides, ...); NULL means defaults. */
TC_API tc_status tc_extractor_create(const char* config_json, tc_extractor** out);
TC_API void tc_extractor_destroy(tc_extractor* extractor);
/* One corpus line in, one feature line out. */
TC_API tc_status tc_extract_record(const tc_extractor* extractor, const char* record_line,
                                   char** out_feature_line);
/* Whole corpus: feature file text and a JSON summary (summary is produced
 * on remote-provider failure too, listing the failing ids). */
TC_API tc_status tc_extract_corpus(const char* corpus_text, const char* config_json,
                                   char** out_features, char** out_summary);

/* Confidence model. */
TC_API tc_status tc_model_train(const char* features_text, const char* config_json, tc_model** out);
TC_API tc_status tc_model_load(const char* model_text, tc_model** out);
TC_API tc_status tc_model_save(const tc_model* model, char** out_text);
TC_API void tc_model_destroy(tc_model* model);
TC_API tc_status tc_model_score(const tc_model* model, const char* feature_line, double* out_confidence);
TC_API tc_status tc_model_score_corpus(const tc_model* model, const char* features_text,
                                       const char* config_json, char** out_scored);

/* Evaluation artifacts; each returns a JSON document. */
TC_API tc_status tc_evaluate(const char* features_text, const char* config_json, char** out_report);
TC_API tc_status tc_route(const tc_model* model, const char* features_text, const char* config_json,
                          char** out_report);
TC_API tc_status tc_ablate(const char* features_text, const char* config_json, char** out_table);
TC_API tc_status tc_transfer(const char* const* names, const char* const* features_texts, size_t count,
                             const char* config_json, char** out_matrix);

/* Synthetic corpus generator (n, error_rate, profile, seed in config). */
TC_API tc_status tc_synthesize(const char* config_json, char** out_corpus);

#ifdef __cplusplus
}
#endif

#endif
