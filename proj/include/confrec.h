/* confrec — context-aware recommender toolkit with conformal intervals.
 *
 * C API over the C++ core. All functions return cr_status; on failure the
 * thread-local cr_last_error() holds a human-readable cause and every
 * out-parameter is set to NULL. Strings returned through char**
 * out-parameters are heap-allocated and must be released with
 * cr_string_free().
 */
#ifndef CONFREC_H
#define CONFREC_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cr_status {
  CR_OK = 0,
  CR_ERR_CONFIG = 1, /* bad usage, bad config, invalid parameters */
  CR_ERR_DATA = 2,   /* unreadable/inconsistent data, unknown ids */
  CR_ERR_TRAIN = 3,  /* training diverged */
  CR_ERR_INTERNAL = 4,
} cr_status;

typedef struct cr_config cr_config;
typedef struct cr_model cr_model;

/* Library version string, e.g. "0.1.0". Static storage; do not free. */
const char* cr_version(void);

/* Message for the most recent failure on this thread. Static storage. */
const char* cr_last_error(void);

/* --- configuration ------------------------------------------------------ */

/* Loads a JSON config file and applies dotted-path overrides such as
 * "model.kind=biasedmf" or "split.seed=7" (values parse as JSON when
 * possible, otherwise as strings). Pass NULL/0 for no overrides. */
cr_status cr_config_load(const char* path, const char* const* overrides, size_t n_overrides,
                         cr_config** out);

/* Same, but from JSON text instead of a file. */
cr_status cr_config_parse(const char* json_text, const char* const* overrides, size_t n_overrides,
                          cr_config** out);

void cr_config_free(cr_config* cfg);

/* --- dataset ------------------------------------------------------------ */

typedef struct cr_dataset_stats {
  int users;
  int items;
  long long interactions;
  int distinct_contexts;
  double density_pairs;
  double density_triples;
  double mean_rating;
} cr_dataset_stats;

/* Loads (or synthesizes) the configured dataset and fills `out`. */
cr_status cr_dataset_stats_from_config(const cr_config* cfg, cr_dataset_stats* out);

/* --- pipeline commands -------------------------------------------------- */

/* verbosity: 0 quiet, 1 progress to stderr, 2 per-epoch detail. */
cr_status cr_train(const cr_config* cfg, int verbosity);
cr_status cr_evaluate(const cr_config* cfg, int verbosity);
cr_status cr_conformal_eval(const cr_config* cfg, int verbosity);

/* Human-readable dataset summary (the ingest-check output). */
cr_status cr_ingest_check(const cr_config* cfg, char** out_text);

/* Point prediction (and interval when epsilon > 0) for raw ids plus
 * context key/value pairs. */
cr_status cr_predict(const cr_config* cfg, const char* user_id, const char* item_id,
                     const char* const* context_keys, const char* const* context_values,
                     size_t n_context, double epsilon, char** out_text);

/* Merges report files into a comparison table; writes plot data to
 * plot_path when non-NULL/non-empty. */
cr_status cr_report(const char* const* report_files, size_t n_files, const char* plot_path,
                    char** out_text);

/* Generates the configured synthetic dataset and writes it to
 * dataset.path as CSV. */
cr_status cr_synth(const cr_config* cfg, char** out_text);

/* --- trained models ----------------------------------------------------- */

cr_status cr_model_load(const char* path, cr_model** out);
void cr_model_free(cr_model* model);

/* Model kind tag ("biasedmf", "proposed", ...). Valid while the model
 * lives; do not free. */
const char* cr_model_kind(const cr_model* model);

/* Clipped rating estimate for raw ids + context key/value pairs. */
cr_status cr_model_predict(const cr_model* model, const char* user_id, const char* item_id,
                           const char* const* context_keys, const char* const* context_values,
                           size_t n_context, double* out_rating);

void cr_string_free(char* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CONFREC_H */
