/* C interface to the poisonbench core. All entry points return pb_status;
 * outputs come back through parameters. Strings returned through char**
 * belong to the caller and are released with pb_string_free. Error messages
 * are per thread: after a failing call, pb_last_error() on the same thread
 * describes it. */

#ifndef POISONBENCH_H
#define POISONBENCH_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pb_status {
    PB_OK = 0,
    PB_PROPERTY_FAILURE = 1,
    PB_CONFIG_ERROR = 2,
    PB_DIVERGENCE = 3,
    PB_INTERNAL_ERROR = 4
} pb_status;

/* Opaque experiment configuration (a parsed JSON document). */
typedef struct pb_config pb_config;

const char* pb_version(void);

/* Message from the most recent failing call on this thread; never NULL. */
const char* pb_last_error(void);

void pb_string_free(char* s);

/* Parses a JSON config. A run manifest is accepted and unwrapped. */
pb_status pb_config_from_text(const char* json_text, pb_config** out);
pb_status pb_config_from_file(const char* path, pb_config** out);

/* Sets dotted_key (e.g. "hyper.gamma") to value; the value string is parsed
 * as JSON when possible, otherwise stored as a string. */
pb_status pb_config_set(pb_config* cfg, const char* dotted_key, const char* value);

/* Full strict validation, including cross-field rules. */
pb_status pb_config_validate(const pb_config* cfg);

/* Resolved config (defaults filled in) as pretty-printed JSON. */
pb_status pb_config_render(const pb_config* cfg, char** out_json);

void pb_config_free(pb_config* cfg);

/* Runs one experiment; writes metrics.csv and manifest.json. output_dir may
 * be NULL to use the config's own output_dir. */
pb_status pb_run_experiment(const pb_config* cfg, const char* output_dir);

/* Runs a sweep spec file; one directory per cell plus summary.csv. Returns
 * PB_PROPERTY_FAILURE if any cell run failed (the sweep still completes). */
pb_status pb_run_sweep(const char* sweep_path, const char* output_dir, int jobs);

/* Runs every built-in analytical check and writes a JSON report. When
 * out_summary is non-NULL it receives printable per-check lines. Returns
 * PB_PROPERTY_FAILURE if any check failed. */
pb_status pb_run_theory_suite(const char* report_path, char** out_summary);

#ifdef __cplusplus
}
#endif

#endif /* POISONBENCH_H */
